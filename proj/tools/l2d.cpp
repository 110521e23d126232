// SPDX-License-Identifier: Apache-2.0
// l2d: command-line front end.
//
//   l2d run --scenario FILE [--seed N] [--window-length L] [--budget DV]
//           [--conops KIND] [--out-dir DIR] [--baseline-report FILE]
//           [--brute-force-check] [--dump-windows]
//   l2d sweep --scenario FILE [--seed N] [--out-dir DIR]
//   l2d validate-config --scenario FILE [--canonical]
//   l2d export-lp --scenario FILE [overrides] [--out-dir DIR]
//   l2d oracle-check --scenario FILE [overrides]
//
// Exit codes: 0 ok, 1 error, 2 usage, 3 solver/oracle disagreement.
// L2D_LOG_LEVEL sets the log level (trace, debug, info, warn, error, off).

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "l2d/l2d.hpp"

namespace {

struct CommonFlags {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> window_length;
  std::optional<double> budget;
  std::optional<std::string> conops;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool overrides) {
  cmd->add_option("--scenario", f.scenario, "scenario YAML file")->required();
  cmd->add_option("--seed", f.seed, "override the scenario seed");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  if (!overrides) return;
  cmd->add_option("--window-length", f.window_length, "receding horizon length L");
  cmd->add_option("--budget", f.budget, "per-platform Delta-v budget (km/s)");
  cmd->add_option("--conops", f.conops, "baseline | plane_change | altitude_change");
}

l2d::ScenarioConfig load(const CommonFlags& f) {
  l2d::ScenarioConfig c = l2d::load_scenario(f.scenario);
  l2d::Overrides o;
  o.seed = f.seed;
  o.window_length = f.window_length;
  o.budget = f.budget;
  if (f.conops) {
    o.conops = l2d::parse_conops(*f.conops);
    if (!o.conops) throw l2d::ConfigError("--conops", "unknown CONOPS '" + *f.conops + "'");
  }
  return l2d::apply_overrides(c, o);
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("l2d");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("L2D_LOG_LEVEL"))
    spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Laser debris-remediation mission planner"};
  app.require_subcommand(1);

  CommonFlags run_f, sweep_f, val_f, lp_f, oc_f;
  std::optional<std::string> baseline_report;
  bool brute_force = false, dump_windows = false, canonical = false;

  auto* run = app.add_subcommand("run", "run the receding-horizon scheduler on a scenario");
  add_common(run, run_f, true);
  run->add_option("--baseline-report", baseline_report, "report.json of a baseline run");
  run->add_flag("--brute-force-check", brute_force, "cross-check every window by exhaustive search");
  run->add_flag("--dump-windows", dump_windows, "write solution_windowN.lp.json per window");

  auto* sweep = app.add_subcommand("sweep", "run a sensitivity sweep from a template");
  add_common(sweep, sweep_f, false);

  auto* val = app.add_subcommand("validate-config", "check a scenario file");
  val->add_option("--scenario", val_f.scenario, "scenario YAML file")->required();
  val->add_flag("--canonical", canonical, "print the canonical form");

  auto* exp = app.add_subcommand("export-lp", "write the first window's model in LP format");
  add_common(exp, lp_f, true);

  auto* oc = app.add_subcommand("oracle-check", "compare every window against exhaustive search");
  add_common(oc, oc_f, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) {
      const auto config = load(run_f);
      l2d::RunOptions ro;
      ro.out_dir = run_f.out_dir;
      if (baseline_report) ro.baseline_report = *baseline_report;
      ro.brute_force_check = brute_force;
      ro.dump_windows = dump_windows;
      const auto res = l2d::run_scenario(config, ro);
      std::cout << l2d::summary_table({res.report}, res.report.baseline_V);
      if (res.oracle_mismatch) return 3;
      return 0;
    }
    if (*sweep) {
      auto config = load(sweep_f);
      const auto res = l2d::run_sweep(config, sweep_f.out_dir);
      for (size_t i = 0; i < res.values.size(); ++i) {
        std::cout << fmt::format("{} = {}\n",
                                 l2d::axis_label(config.sweep->axis), res.values[i]);
        std::optional<double> base;
        for (const auto& r : res.cells[i])
          if (r.conops == l2d::Conops::kBaseline) base = r.V;
        std::cout << l2d::summary_table(res.cells[i], base) << '\n';
      }
      return 0;
    }
    if (*val) {
      const auto config = l2d::load_scenario(val_f.scenario);
      if (canonical) std::cout << l2d::to_yaml(config);
      else std::cout << "valid: " << config.name << '\n';
      return 0;
    }
    if (*exp) {
      const auto config = load(lp_f);
      const auto mission = l2d::build_mission(config);
      const auto rc = l2d::build_rhs_config(config);
      const l2d::PlatformSlotGrid grid(mission.catalogs, mission.step_seconds, mission.earth);
      std::vector<int> slots(mission.catalogs.size(), 0);
      std::vector<l2d::DebrisStatus> status;
      for (const auto& d : mission.debris)
        status.push_back(l2d::natural_status(d, 0, mission.step_seconds, mission.earth));
      const int L = std::min(rc.window_length, mission.horizon - 1);
      const auto wp = l2d::build_window_problem(mission, rc, grid, 0, L, slots, mission.budgets,
                                                status);
      const auto sol = l2d::solve(wp.model, rc.solve);
      std::filesystem::create_directories(lp_f.out_dir);
      const std::filesystem::path dir = lp_f.out_dir;
      l2d::write_file(dir / "window0.lp", l2d::export_model(wp.model));
      l2d::write_file(dir / "window0.solution.json", l2d::solution_json(wp.model, sol).dump(2) + "\n");
      std::cout << fmt::format("wrote {} ({} variables, {} rows), objective {}\n",
                               (dir / "window0.lp").string(), wp.model.num_vars(),
                               wp.model.num_rows(), sol.objective);
      return 0;
    }
    if (*oc) {
      const auto config = load(oc_f);
      const auto mission = l2d::build_mission(config);
      auto rc = l2d::build_rhs_config(config);
      rc.brute_force_check = true;
      const auto log = l2d::run_rhs(mission, rc);
      bool ok = true;
      for (const auto& w : log.windows) {
        const bool agree = std::abs(*w.oracle_objective - w.objective) <= 1e-9;
        ok = ok && agree;
        std::cout << fmt::format("window {:>4}: solver {:.9f}  exhaustive {:.9f}  {}\n", w.start,
                                 w.objective, *w.oracle_objective, agree ? "agree" : "DIFFER");
      }
      return ok ? 0 : 3;
    }
  } catch (const l2d::Error& e) {
    spdlog::error("[{}] {}", e.module(), e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
