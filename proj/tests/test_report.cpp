#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "l2d/report.hpp"

using namespace l2d;
namespace fs = std::filesystem;

namespace {

const char* kScenario = R"(
name: report-check
horizon: {steps: 6, step_s: 180}
platforms:
  - {sma_km: 6990, inclination_deg: 50, raan_deg: 10, arg_lat_deg: 0}
  - {sma_km: 7040, inclination_deg: 50.5, raan_deg: 10.5, arg_lat_deg: 3}
conops: {kind: altitude_change, phases: 3, layers: 3, layer_step_km: 40}
budget_km_s: 1
rhs: {window_length: 2}
debris:
  breakup:
    parent: {sma_km: 7000, inclination_deg: 50, raan_deg: 10, arg_lat_deg: 1.5}
    trigger_s: 0
    fragments: 12
    max_sma_deviation_km: 20
    max_angle_deviation_deg: 0.5
sweep: {axis: budget, values: [0.3, 1], conops: [baseline, altitude_change]}
seed: 4
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("l2d_report_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Report, ImprovementFormat) {
  EXPECT_EQ(format_improvement(120, 100), "20.00 %");
  EXPECT_EQ(format_improvement(99.5, 100), "-0.50 %");
  EXPECT_EQ(format_improvement(1, 3), "-66.67 %");
  EXPECT_EQ(format_improvement(5, 0), "n/a");
}

TEST(Report, RunWritesConsistentFiles) {
  const ScenarioConfig c = load_scenario_text(kScenario);
  RunOptions o;
  o.out_dir = scratch("run");
  o.dump_windows = true;
  const RunResult r = run_scenario(c, o);

  const auto j = nlohmann::json::parse(slurp(o.out_dir / "report.json"));
  EXPECT_EQ(j["scenario"], "report-check");
  EXPECT_EQ(j["conops"], "altitude_change");
  EXPECT_EQ(j["debris"], 12);
  EXPECT_EQ(j["remediation_capacity"].get<double>(), r.log.V);
  EXPECT_FALSE(j.contains("improvement"));
  EXPECT_GT(r.log.V, 0);
  EXPECT_EQ(j["solver_gaps"].size(), r.log.windows.size());

  const auto ts = csv(o.out_dir / "timeseries.csv");
  ASSERT_EQ(ts.size(), 7u);
  EXPECT_EQ(ts[0].size(), 6u);
  EXPECT_EQ(ts[0][0], "step");
  EXPECT_EQ(std::stod(ts[6][1]), r.log.V);
  EXPECT_EQ(std::stoi(ts[6][3]), r.log.deorbits);

  // Every committed move and shot appears once, and moves never overspend.
  const auto sched = csv(o.out_dir / "schedule.csv");
  ASSERT_FALSE(sched.empty());
  EXPECT_EQ(sched[0], (std::vector<std::string>{"t", "platform", "action", "target", "dv_km_s"}));
  size_t expect_rows = 0;
  for (const auto& s : r.log.steps) {
    expect_rows += s.fires.size();
    for (size_t p = 0; p < s.from_slot.size(); ++p) expect_rows += s.from_slot[p] != s.to_slot[p];
  }
  EXPECT_EQ(sched.size() - 1, expect_rows);
  std::vector<double> spent(2, 0.0);
  for (size_t i = 1; i < sched.size(); ++i)
    if (sched[i][2] == "move") spent[std::stoi(sched[i][1])] += std::stod(sched[i][4]);
  for (double s : spent) EXPECT_LE(s, 1.0 + 1e-9);

  EXPECT_TRUE(fs::exists(o.out_dir / "timing.json"));
  EXPECT_EQ(fs::exists(o.out_dir / "solution_window0.lp.json"), true);
  EXPECT_EQ(fs::exists(o.out_dir / fmt::format("solution_window{}.lp.json", r.log.windows.size())),
            false);
}

TEST(Report, RunsAreByteIdentical) {
  const ScenarioConfig c = load_scenario_text(kScenario);
  RunOptions a, b;
  a.out_dir = scratch("det_a");
  b.out_dir = scratch("det_b");
  run_scenario(c, a);
  run_scenario(c, b);
  for (const char* f : {"report.json", "timeseries.csv", "schedule.csv"})
    EXPECT_EQ(slurp(a.out_dir / f), slurp(b.out_dir / f)) << f;
}

TEST(Report, BaselineComparison) {
  const ScenarioConfig c = load_scenario_text(kScenario);
  Overrides ob;
  ob.conops = Conops::kBaseline;
  RunOptions base;
  base.out_dir = scratch("base");
  const RunResult b = run_scenario(apply_overrides(c, ob), base);
  RunOptions o;
  o.out_dir = scratch("cmp");
  o.baseline_report = base.out_dir / "report.json";
  const RunResult r = run_scenario(c, o);
  const auto j = nlohmann::json::parse(slurp(o.out_dir / "report.json"));
  EXPECT_EQ(j["baseline_remediation_capacity"].get<double>(), b.log.V);
  EXPECT_EQ(j["improvement"], format_improvement(r.log.V, b.log.V));
  o.baseline_report = base.out_dir / "missing.json";
  EXPECT_THROW(run_scenario(c, o), Error);
}

TEST(Report, SweepMatrices) {
  const ScenarioConfig c = load_scenario_text(kScenario);
  const fs::path dir = scratch("sweep");
  const SweepResult s = run_sweep(c, dir);
  const auto V = csv(dir / "sweep_V.csv");
  ASSERT_EQ(V.size(), 3u);
  EXPECT_EQ(V[0], (std::vector<std::string>{"budget_km_s", "baseline", "altitude_change"}));
  // Baseline platforms never move, so the budget axis leaves them alone.
  EXPECT_EQ(V[1][1], V[2][1]);
  EXPECT_EQ(std::stod(V[1][2]), s.cells[0][1].V);
  EXPECT_EQ(csv(dir / "sweep_deorbits.csv").size(), 3u);
  const auto imp = csv(dir / "sweep_improvement.csv");
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[0], (std::vector<std::string>{"budget_km_s", "altitude_change_pct"}));
  for (size_t i = 1; i < imp.size(); ++i) {
    const double base = s.cells[i - 1][0].V;
    if (base == 0) EXPECT_EQ(imp[i][1], "");
    else EXPECT_EQ(imp[i][1], fmt::format("{:.2f}", (s.cells[i - 1][1].V - base) / base * 100));
  }
  EXPECT_TRUE(fs::exists(dir / "baseline_budget_km_s_0.3" / "report.json"));

  const fs::path again = scratch("sweep2");
  run_sweep(c, again);
  for (const char* f : {"sweep_V.csv", "sweep_deorbits.csv", "sweep_improvement.csv"})
    EXPECT_EQ(slurp(dir / f), slurp(again / f)) << f;
}

TEST(Report, SweepNeedsSection) {
  ScenarioConfig c = load_scenario_text(kScenario);
  c.sweep.reset();
  EXPECT_THROW(run_sweep(c, scratch("none")), ConfigError);
}
