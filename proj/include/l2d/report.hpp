// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run and sweep drivers plus their on-disk artifacts:
//   report.json      aggregate results (no timing, so reruns are byte-identical)
//   timing.json      wall-clock time
//   timeseries.csv   one row per step
//   schedule.csv     committed maneuvers and firings
//   sweep_*.csv      sweep matrices

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "l2d/ilp.hpp"
#include "l2d/rhs.hpp"
#include "l2d/scenario.hpp"

namespace l2d {

struct RunReport {
  std::string scenario;
  Conops conops = Conops::kBaseline;
  std::uint64_t seed = 0;
  int window_length = 0;
  double budget = 0;
  int horizon = 0;
  double step_seconds = 0;
  int platforms = 0;
  int debris = 0;
  double V = 0;
  int deorbits = 0;
  int engagements = 0;
  std::vector<double> dv_consumed;
  std::vector<double> gaps;
  double wall_seconds = 0;
  std::optional<double> baseline_V;
};

inline std::string format_improvement(double v, double base) {
  if (base == 0) return "n/a";
  return fmt::format("{:.2f} %", (v - base) / base * 100.0);
}

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario;
  j["conops"] = to_string(r.conops);
  j["seed"] = r.seed;
  j["window_length"] = r.window_length;
  j["budget_km_s"] = r.budget;
  j["horizon_steps"] = r.horizon;
  j["step_s"] = r.step_seconds;
  j["platforms"] = r.platforms;
  j["debris"] = r.debris;
  j["remediation_capacity"] = r.V;
  j["deorbits"] = r.deorbits;
  j["engagements"] = r.engagements;
  j["dv_consumed_km_s"] = r.dv_consumed;
  j["solver_gaps"] = r.gaps;
  if (r.baseline_V) {
    j["baseline_remediation_capacity"] = *r.baseline_V;
    j["improvement"] = format_improvement(r.V, *r.baseline_V);
  }
  return j;
}

inline RunReport make_report(const ScenarioConfig& c, const Mission& m, const MissionLog& log) {
  RunReport r;
  r.scenario = c.name;
  r.conops = c.conops.kind;
  r.seed = c.seed;
  r.window_length = c.window_length;
  r.budget = c.budget_km_s;
  r.horizon = c.steps;
  r.step_seconds = c.step_seconds;
  r.platforms = static_cast<int>(c.platforms.size());
  r.debris = static_cast<int>(m.debris.size());
  r.V = log.V;
  r.deorbits = log.deorbits;
  r.engagements = log.engagements;
  r.dv_consumed.assign(r.platforms, 0.0);
  for (const auto& s : log.steps)
    for (int p = 0; p < r.platforms; ++p) r.dv_consumed[p] += s.maneuver_dv[p];
  for (const auto& w : log.windows) r.gaps.push_back(w.gap);
  return r;
}

inline std::string timeseries_csv(const MissionLog& log) {
  std::string out = "step,V_cumulative,engagements_cumulative,deorbits_cumulative";
  const size_t P = log.budgets.empty() ? 0 : log.budgets[0].size();
  for (size_t p = 0; p < P; ++p) out += fmt::format(",budget_p{}", p);
  out += '\n';
  double V = 0;
  int eng = 0, deo = 0;
  for (int t = 0; t < log.horizon; ++t) {
    if (t > 0) {
      const auto& s = log.steps[t - 1];
      V += s.reward;
      eng += s.engagements;
      deo += s.deorbits;
    }
    out += fmt::format("{},{},{},{}", t, V, eng, deo);
    for (size_t p = 0; p < P; ++p) out += fmt::format(",{}", log.budgets[t][p]);
    out += '\n';
  }
  return out;
}

inline std::string schedule_csv(const MissionLog& log) {
  std::string out = "t,platform,action,target,dv_km_s\n";
  for (const auto& s : log.steps) {
    for (size_t p = 0; p < s.from_slot.size(); ++p)
      if (s.from_slot[p] != s.to_slot[p])
        out += fmt::format("{},{},move,slot {}->{},{}\n", s.t, p, s.from_slot[p], s.to_slot[p],
                           s.maneuver_dv[p]);
    for (const auto& f : s.fires)
      out += fmt::format("{},{},fire,debris {},{}\n", s.t, f.platform, f.debris, f.dv);
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("report", "cannot write " + path.string());
  out << text;
}

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> baseline_report;
  bool brute_force_check = false;
  bool dump_windows = false;
};

struct RunResult {
  RunReport report;
  MissionLog log;
  bool oracle_mismatch = false;
};

inline double read_baseline_V(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("report", "cannot read baseline report " + path.string());
  try {
    return nlohmann::json::parse(in).at("remediation_capacity").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("report", "baseline report " + path.string() + ": " + e.what());
  }
}

inline RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const Mission mission = build_mission(config);
  RhsConfig rc = build_rhs_config(config);
  rc.brute_force_check = options.brute_force_check;
  std::filesystem::create_directories(options.out_dir);
  int window_index = 0;
  if (options.dump_windows) {
    rc.on_window = [&](int, const IlpModel& model, const Solution& sol) {
      write_file(options.out_dir / fmt::format("solution_window{}.lp.json", window_index++),
                 solution_json(model, sol).dump(2) + "\n");
    };
  }
  RunResult res;
  res.log = run_rhs(mission, rc);
  res.report = make_report(config, mission, res.log);
  if (options.baseline_report) res.report.baseline_V = read_baseline_V(*options.baseline_report);
  for (const auto& w : res.log.windows) {
    if (w.oracle_objective && std::abs(*w.oracle_objective - w.objective) > 1e-9) {
      res.oracle_mismatch = true;
      spdlog::error("window {}: solver objective {} but exhaustive search finds {}", w.start,
                    w.objective, *w.oracle_objective);
    }
  }
  res.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(options.out_dir / "report.json", to_json(res.report).dump(2) + "\n");
  write_file(options.out_dir / "timeseries.csv", timeseries_csv(res.log));
  write_file(options.out_dir / "schedule.csv", schedule_csv(res.log));
  nlohmann::json timing;
  timing["wall_seconds"] = res.report.wall_seconds;
  write_file(options.out_dir / "timing.json", timing.dump(2) + "\n");
  return res;
}

inline std::string summary_table(const std::vector<RunReport>& reports,
                                 std::optional<double> baseline_V) {
  std::string out = fmt::format("{:<16} {:>14} {:>9} {:>12} {:>12}\n", "CONOPS",
                                "Remediation", "Deorbits", "Engagements", "Improvement");
  for (const auto& r : reports) {
    const auto base = r.baseline_V ? r.baseline_V : baseline_V;
    out += fmt::format("{:<16} {:>14.2f} {:>9} {:>12} {:>12}\n", to_string(r.conops), r.V,
                       r.deorbits, r.engagements,
                       base && r.conops != Conops::kBaseline ? format_improvement(r.V, *base) : "-");
  }
  return out;
}

struct SweepResult {
  std::vector<double> values;
  std::vector<Conops> conops;
  std::vector<std::vector<RunReport>> cells;  // [value][conops]
};

inline std::string axis_label(SweepAxis a) {
  return a == SweepAxis::kWindowLength ? "window_length" : "budget_km_s";
}

inline SweepResult run_sweep(const ScenarioConfig& tmpl, const std::filesystem::path& out_dir) {
  if (!tmpl.sweep) throw ConfigError("sweep", "scenario has no sweep section");
  const SweepConfig& sw = *tmpl.sweep;
  SweepResult res;
  res.values = sw.values;
  res.conops = sw.conops;
  for (double v : sw.values) {
    std::vector<RunReport> row;
    for (Conops k : sw.conops) {
      Overrides o;
      o.conops = k;
      if (sw.axis == SweepAxis::kWindowLength) o.window_length = static_cast<int>(v);
      else o.budget = v;
      const std::string cell = fmt::format("{}_{}_{}", to_string(k), axis_label(sw.axis), v);
      ScenarioConfig c;
      try {
        c = apply_overrides(tmpl, o);
        RunOptions ro;
        ro.out_dir = out_dir / cell;
        row.push_back(run_scenario(c, ro).report);
      } catch (const Error& e) {
        throw Error("report", "sweep cell " + cell + " failed: " + e.what());
      }
      spdlog::info("sweep cell {}: V = {}", cell, row.back().V);
    }
    res.cells.push_back(std::move(row));
  }
  const std::string axis = axis_label(sw.axis);
  auto matrix = [&](auto metric) {
    std::string out = axis;
    for (Conops k : res.conops) out += fmt::format(",{}", to_string(k));
    out += '\n';
    for (size_t i = 0; i < res.values.size(); ++i) {
      out += fmt::format("{}", res.values[i]);
      for (const auto& r : res.cells[i]) out += fmt::format(",{}", metric(r));
      out += '\n';
    }
    return out;
  };
  write_file(out_dir / "sweep_V.csv", matrix([](const RunReport& r) { return r.V; }));
  write_file(out_dir / "sweep_deorbits.csv", matrix([](const RunReport& r) { return r.deorbits; }));
  auto base_it = std::find(res.conops.begin(), res.conops.end(), Conops::kBaseline);
  if (base_it != res.conops.end()) {
    const size_t b = base_it - res.conops.begin();
    std::string out = axis;
    for (Conops k : res.conops)
      if (k != Conops::kBaseline) out += fmt::format(",{}_pct", to_string(k));
    out += '\n';
    for (size_t i = 0; i < res.values.size(); ++i) {
      out += fmt::format("{}", res.values[i]);
      const double base = res.cells[i][b].V;
      for (size_t q = 0; q < res.conops.size(); ++q) {
        if (q == b) continue;
        out += base == 0 ? std::string(",") : fmt::format(",{:.2f}", (res.cells[i][q].V - base) / base * 100);
      }
      out += '\n';
    }
    write_file(out_dir / "sweep_improvement.csv", out);
  }
  return res;
}

}  // namespace l2d
