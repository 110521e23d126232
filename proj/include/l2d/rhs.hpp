// SPDX-License-Identifier: Apache-2.0
#pragma once

// Receding-horizon scheduler. Each window [l, l + L] is rebuilt from the
// committed platform slots, remaining budgets and debris states, solved
// exactly, and only step l is committed. The final window [T-1-L, T-1]
// commits all of its steps.

#include <spdlog/spdlog.h>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "l2d/errors.hpp"
#include "l2d/grid.hpp"
#include "l2d/ilp.hpp"
#include "l2d/pla.hpp"
#include "l2d/teg.hpp"

namespace l2d {

// Everything physical about a mission: who flies where, what can be hit.
struct Mission {
  std::vector<std::vector<KeplerianElements>> catalogs;  // per platform, slot 0 first
  std::vector<DebrisBody> debris;
  std::vector<ActiveSpacecraft> active;
  LaserSystem laser;
  EarthConstants earth;
  int horizon = 0;  // T, number of steps
  double step_seconds = 180;
  std::vector<double> budgets;  // initial c_max per platform
  double r_deorbit = 6578.137;
  double alpha = 1e6;
};

struct RhsConfig {
  int window_length = 3;
  TegSettings teg;
  ModelOptions model;
  SolveOptions solve;
  WindowOptions window;
  bool brute_force_check = false;
  // Called with every window's model and solution (for dumps).
  std::function<void(int, const IlpModel&, const Solution&)> on_window;
};

struct CommittedFire {
  int platform = 0;
  int slot = 0;
  int debris = 0;  // debris id
  double dv = 0;   // magnitude imparted on the debris, km/s
};

struct CommittedStep {
  int t = 0;
  std::vector<int> from_slot, to_slot;  // per platform
  std::vector<double> maneuver_dv;      // per platform, km/s
  std::vector<CommittedFire> fires;
  double reward = 0;
  int engagements = 0;  // debris engaged this step
  int deorbits = 0;
};

struct WindowRecord {
  int start = 0;
  int length = 0;
  int committed = 0;
  double objective = 0;
  double gap = 0;
  std::string status;
  long nodes = 0;
  int vars = 0;
  int rows = 0;
  std::optional<double> oracle_objective;
};

struct MissionLog {
  int horizon = 0;
  int window_length = 0;
  std::vector<CommittedStep> steps;                  // T - 1 transitions
  std::vector<std::vector<DebrisStatus>> debris;     // [t][d], T entries
  std::vector<std::vector<double>> budgets;          // [t][p], T entries
  std::vector<std::vector<int>> platform_slot;       // [t][p], T entries
  std::vector<WindowRecord> windows;
  double V = 0;
  int engagements = 0;
  int deorbits = 0;
};

// Remaining budgets after committing one step of maneuvers.
inline std::vector<double> update_platform_budget(std::vector<double> budgets,
                                                  std::span<const double> committed_costs) {
  if (budgets.size() != committed_costs.size())
    throw InvalidInput("rhs", "one committed cost per platform required");
  for (size_t p = 0; p < budgets.size(); ++p) {
    const double left = budgets[p] - committed_costs[p];
    if (left < -1e-9)
      throw ContractViolation("rhs", "platform " + std::to_string(p) + " overdraws its budget");
    budgets[p] = std::max(left, 0.0);
  }
  return budgets;
}

struct DebrisFire {
  int debris = 0;  // index into the debris list
  Vec3 platform_position;
};

struct DebrisUpdate {
  std::vector<DebrisStatus> next;  // states at t + 1
  std::vector<double> reward;      // per debris, reward of the realized edge
  std::vector<bool> engaged, deorbited;
};

// Applies one step of committed firings at step t and advances every debris
// object to t + 1.
inline DebrisUpdate update_debris_state(std::span<const DebrisBody> bodies,
                                        std::span<const DebrisStatus> current, int t,
                                        std::span<const DebrisFire> fires,
                                        const LaserSystem& laser, const RewardSettings& reward) {
  const size_t D = bodies.size();
  if (current.size() != D) throw InvalidInput("rhs", "one debris status per body required");
  DebrisUpdate out;
  out.next.resize(D);
  out.reward.assign(D, 0.0);
  out.engaged.assign(D, false);
  out.deorbited.assign(D, false);
  std::vector<std::vector<Vec3>> dvs(D);
  for (const auto& f : fires) {
    if (f.debris < 0 || f.debris >= static_cast<int>(D))
      throw InvalidInput("rhs", "firing at an unknown debris object");
    const auto& st = current[f.debris];
    if (st.status != NodeStatus::kActive)
      throw ContractViolation("rhs", "engagement on debris " + std::to_string(bodies[f.debris].id) +
                                         " which is not in orbit");
    dvs[f.debris].push_back(
        pla::delta_v_engagement(laser, f.platform_position, st.state, bodies[f.debris].surface_density));
  }
  const double tof = reward.step_seconds;
  for (size_t d = 0; d < D; ++d) {
    const auto& st = current[d];
    switch (st.status) {
      case NodeStatus::kDeorbited:
        out.next[d] = DebrisStatus::deorbited();
        continue;
      case NodeStatus::kDormant:
        out.next[d] = t + 1 >= bodies[d].appear_step
                          ? natural_status(bodies[d], t + 1, tof, reward.earth)
                          : DebrisStatus::dormant();
        continue;
      case NodeStatus::kActive:
        break;
    }
    if (dvs[d].empty()) {
      out.next[d] = DebrisStatus::active(astro::propagate_two_body(st.state, tof, reward.earth));
      continue;
    }
    const StateVector post = pla::apply_cooperative_engagement(st.state, dvs[d]);
    const TransferReward r = transfer_reward(st.state, post, t, reward);
    out.engaged[d] = true;
    out.reward[d] = r.value;
    out.deorbited[d] = r.deorbit;
    out.next[d] = r.deorbit ? DebrisStatus::deorbited()
                            : DebrisStatus::active(astro::propagate_two_body(post, tof, reward.earth));
  }
  return out;
}

inline bool same_status(const DebrisStatus& a, const DebrisStatus& b, double tol = 1e-9) {
  if (a.status != b.status) return false;
  if (a.status != NodeStatus::kActive) return true;
  return (a.state.r - b.state.r).norm() <= tol * std::max(1.0, a.state.r.norm()) &&
         (a.state.v - b.state.v).norm() <= tol * std::max(1.0, a.state.v.norm());
}

struct WindowProblem {
  GridWindow window;
  std::vector<int> debris_index;  // model position -> index into Mission::debris
  std::vector<DebrisTeg> tegs;
  IlpModel model;
};

inline RewardSettings reward_settings(const Mission& mission) {
  RewardSettings reward;
  reward.r_deorbit = mission.r_deorbit;
  reward.alpha = mission.alpha;
  reward.step_seconds = mission.step_seconds;
  reward.active = mission.active;
  reward.earth = mission.earth;
  return reward;
}

// The integer program of one window, given where everything stands at `start`.
// Debris already deorbited are left out.
inline WindowProblem build_window_problem(const Mission& mission, const RhsConfig& config,
                                          const PlatformSlotGrid& grid, int start, int length,
                                          std::span<const int> slots,
                                          std::span<const double> budgets,
                                          std::span<const DebrisStatus> status,
                                          EdgeCostCache* cache = nullptr) {
  WindowProblem wp;
  wp.window = extract_window(grid, start, length, slots, budgets, cache, config.window);
  const RewardSettings reward = reward_settings(mission);
  for (int d = 0; d < static_cast<int>(mission.debris.size()); ++d) {
    if (status[d].status == NodeStatus::kDeorbited) continue;
    wp.debris_index.push_back(d);
    wp.tegs.push_back(generate_debris_teg(mission.debris[d], status[d], wp.window, mission.laser,
                                          reward, config.teg));
  }
  wp.model = build_model(wp.window, wp.tegs, config.model);
  return wp;
}

inline MissionLog run_rhs(const Mission& mission, const RhsConfig& config) {
  const int T = mission.horizon;
  const int L = config.window_length;
  const int P = static_cast<int>(mission.catalogs.size());
  const int D = static_cast<int>(mission.debris.size());
  if (T < 3) throw InvalidInput("rhs", "horizon must have at least 3 steps");
  if (L < 2 || L > T - 1)
    throw InvalidInput("rhs", "window length must satisfy 2 <= L <= T-1 (L=" + std::to_string(L) +
                                  ", T=" + std::to_string(T) + ")");
  if (static_cast<int>(mission.budgets.size()) != P)
    throw InvalidInput("rhs", "one budget per platform required");
  mission.laser.validate();

  const PlatformSlotGrid grid(mission.catalogs, mission.step_seconds, mission.earth);
  EdgeCostCache cache;
  const RewardSettings reward = reward_settings(mission);

  MissionLog log;
  log.horizon = T;
  log.window_length = L;
  std::vector<int> slots(P, 0);
  std::vector<double> budgets = mission.budgets;
  std::vector<DebrisStatus> status(D);
  for (int d = 0; d < D; ++d)
    status[d] = natural_status(mission.debris[d], 0, mission.step_seconds, mission.earth);
  log.debris.push_back(status);
  log.budgets.push_back(budgets);
  log.platform_slot.push_back(slots);

  auto run_window = [&](int start, int commit) {
    const WindowProblem wp =
        build_window_problem(mission, config, grid, start, L, slots, budgets, status, &cache);
    const GridWindow& window = wp.window;
    const std::vector<int>& in_model = wp.debris_index;
    const std::vector<DebrisTeg>& tegs = wp.tegs;
    const IlpModel& model = wp.model;
    const Solution sol = solve(model, config.solve);
    if (sol.status == SolveStatus::kInfeasible)
      throw ContractViolation("rhs", "window at step " + std::to_string(start) +
                                         " is infeasible; the no-engagement schedule should always fit");
    if (sol.values.empty())
      throw ContractViolation("rhs", "window at step " + std::to_string(start) +
                                         " hit the time limit without a schedule");
    if (sol.status == SolveStatus::kCapExceeded)
      spdlog::warn("window {} stopped at the time limit, gap {}", start, sol.gap);
    if (config.on_window) config.on_window(start, model, sol);
    WindowRecord rec{start, L, commit, sol.objective, sol.gap, to_string(sol.status), sol.nodes,
                     model.num_vars(), model.num_rows(), std::nullopt};
    if (config.brute_force_check) {
      BruteForceOptions bf;
      bf.strict_consistency = config.model.strict_consistency;
      rec.oracle_objective = brute_force_solve(window, tegs, bf).objective;
    }
    log.windows.push_back(rec);
    spdlog::debug("window {}: objective {} ({} vars, {} rows, {} nodes)", start, sol.objective,
                  model.num_vars(), model.num_rows(), sol.nodes);

    const auto plan = decode(model, sol, window, tegs);
    std::vector<int> node(tegs.size(), 0);
    for (int k = 0; k < commit; ++k) {
      const int t = start + k;
      CommittedStep step;
      step.t = t;
      step.from_slot = slots;
      step.maneuver_dv.assign(P, 0.0);
      for (int p = 0; p < P; ++p) {
        const auto& pw = window.platforms[p];
        const auto& edge = pw.edges[k][plan[k].platform_edge[p]];
        if (pw.slots[k][edge.from] != slots[p])
          throw ContractViolation("rhs", "committed transfer does not start at the current slot");
        step.maneuver_dv[p] = edge.cost;
        slots[p] = pw.slots[k + 1][edge.to];
      }
      step.to_slot = slots;
      std::vector<DebrisFire> fires;
      for (const auto& f : plan[k].fires) {
        const int d = in_model[f.debris];
        const Vec3 pos = grid.state(f.platform, t, f.slot).r;
        fires.push_back({d, pos});
        step.fires.push_back({f.platform, f.slot, mission.debris[d].id,
                              pla::delta_v_engagement(mission.laser, pos, status[d].state,
                                                      mission.debris[d].surface_density)
                                  .norm()});
      }
      const DebrisUpdate upd =
          update_debris_state(mission.debris, status, t, fires, mission.laser, reward);
      for (size_t q = 0; q < tegs.size(); ++q) {
        const int d = in_model[q];
        const TegNode& chosen = tegs[q].layers[k + 1][plan[k].debris_node[q]];
        if (!same_status(chosen.status, upd.next[d]) ||
            std::abs(chosen.reward - upd.reward[d]) > 1e-9 * std::max(1.0, std::abs(chosen.reward)))
          throw ContractViolation("rhs", "debris " + std::to_string(mission.debris[d].id) +
                                             " state update disagrees with its graph at step " +
                                             std::to_string(t));
        node[q] = plan[k].debris_node[q];
      }
      for (int d = 0; d < D; ++d) {
        step.reward += upd.reward[d];
        step.engagements += upd.engaged[d] ? 1 : 0;
        step.deorbits += upd.deorbited[d] ? 1 : 0;
      }
      budgets = update_platform_budget(budgets, step.maneuver_dv);
      status = upd.next;
      log.V += step.reward;
      log.engagements += step.engagements;
      log.deorbits += step.deorbits;
      log.steps.push_back(std::move(step));
      log.debris.push_back(status);
      log.budgets.push_back(budgets);
      log.platform_slot.push_back(slots);
    }
    cache.evict_before(start + 1);
  };

  for (int l = 0; l <= T - L - 2; ++l) run_window(l, 1);
  run_window(T - 1 - L, L);
  return log;
}

}  // namespace l2d
