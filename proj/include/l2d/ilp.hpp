// SPDX-License-Identifier: Apache-2.0
#pragma once

// The engagement-scheduling integer program over one scheduler window.
//
// Variables (all binary), in this order:
//   x  one per debris graph edge (parent in layer k -> child in layer k + 1)
//   y  platform p in slot s fires at debris d during step k; created only for
//      (p, s) pairs that appear in some combo of d's graph at that step
//   z  one per platform grid edge of the window
// Only x carries objective weight (the edge reward).

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "l2d/errors.hpp"
#include "l2d/grid.hpp"
#include "l2d/lp.hpp"
#include "l2d/teg.hpp"

namespace l2d {

enum class VarKind { kX, kY, kZ };

struct VarInfo {
  VarKind kind = VarKind::kX;
  int k = 0;        // window-relative step
  int debris = -1;  // x, y: position of the debris graph in the model
  int parent = -1;  // x: node index in layer k
  int node = -1;    // x: node index in layer k + 1
  int platform = -1;
  int slot = -1;     // y: slot id; z: departure slot id
  int to_slot = -1;  // z: arrival slot id
  int edge = -1;     // z: index into the window's edges[k]
  double cost = 0;   // z: transfer cost
};

enum class RowFamily {
  kDebrisRoot,     // one edge out of the current debris node
  kDebrisFlow,     // path continuity in the debris graph
  kComboCoupling,  // a combo edge needs every listed platform firing
  kOccupancy,      // firing from slot s needs the platform to be in s
  kSingleTarget,   // at most one target per platform and step
  kFireOrMove,     // a platform cannot fire and maneuver in one step
  kPlatformStart,  // one edge out of the current platform slot
  kPlatformFlow,   // path continuity in the platform grid
  kBudget,         // total maneuver cost within the remaining budget
  kConsistency,    // firings on d equal the chosen combo exactly
};

struct ModelRow {
  lp::Row row;
  RowFamily family;
  std::string name;
};

struct ModelOptions {
  bool strict_consistency = true;
};

struct IlpModel {
  int start_step = 0;
  int length = 0;
  int num_platforms = 0;
  int num_debris = 0;
  std::vector<int> debris_ids;
  std::vector<double> budgets;
  std::vector<VarInfo> vars;
  std::vector<std::string> names;
  std::vector<double> objective;
  std::vector<double> lower, upper;
  std::vector<ModelRow> rows;

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  // x edge into `node` of layer k + 1 of debris graph d.
  int x_index(int k, int d, int node) const { return x_base_[k][d] + node; }
  int z_index(int k, int p, int edge) const { return z_base_[k][p] + edge; }
  std::optional<int> y_index(int k, int p, int slot, int d) const {
    auto it = y_lookup_.find({k, p, slot, d});
    if (it == y_lookup_.end()) return std::nullopt;
    return it->second;
  }
  size_t count(VarKind kind) const {
    return std::count_if(vars.begin(), vars.end(), [&](const VarInfo& v) { return v.kind == kind; });
  }
  size_t count(RowFamily family) const {
    return std::count_if(rows.begin(), rows.end(),
                         [&](const ModelRow& r) { return r.family == family; });
  }

  std::vector<std::vector<int>> x_base_, z_base_;
  std::map<std::tuple<int, int, int, int>, int> y_lookup_;
};

inline IlpModel build_model(const GridWindow& window, std::span<const DebrisTeg> tegs,
                            const ModelOptions& options = {}) {
  for (const auto& teg : tegs)
    if (teg.start_step != window.start_step || teg.length() != window.length)
      throw InvalidInput("ilp", "debris graph " + std::to_string(teg.debris) +
                                    " does not span the platform window");
  if (static_cast<int>(window.budgets.size()) != window.num_platforms())
    throw InvalidInput("ilp", "one budget per platform required");

  IlpModel m;
  m.start_step = window.start_step;
  m.length = window.length;
  m.num_platforms = window.num_platforms();
  m.num_debris = static_cast<int>(tegs.size());
  m.budgets = window.budgets;
  for (const auto& teg : tegs) m.debris_ids.push_back(teg.debris);
  const int L = window.length, P = m.num_platforms, D = m.num_debris;

  auto add_var = [&](VarInfo info, std::string name, double obj) {
    m.vars.push_back(info);
    m.names.push_back(std::move(name));
    m.objective.push_back(obj);
    return m.num_vars() - 1;
  };
  auto t_of = [&](int k) { return window.start_step + k; };

  m.x_base_.assign(L, std::vector<int>(D, 0));
  for (int k = 0; k < L; ++k) {
    for (int d = 0; d < D; ++d) {
      m.x_base_[k][d] = m.num_vars();
      const auto& layer = tegs[d].layers[k + 1];
      for (int j = 0; j < static_cast<int>(layer.size()); ++j) {
        VarInfo v;
        v.kind = VarKind::kX;
        v.k = k;
        v.debris = d;
        v.parent = layer[j].parent;
        v.node = j;
        add_var(v, fmt::format("x_{}_{}_{}_{}", t_of(k), tegs[d].debris, v.parent, j),
                layer[j].reward);
      }
    }
  }
  for (int k = 0; k < L; ++k) {
    for (int d = 0; d < D; ++d) {
      std::vector<SlotAssignment> members;
      for (const auto& node : tegs[d].layers[k + 1])
        members.insert(members.end(), node.combo.begin(), node.combo.end());
      std::sort(members.begin(), members.end());
      members.erase(std::unique(members.begin(), members.end()), members.end());
      for (const auto& a : members) m.y_lookup_[{k, a.platform, a.slot, d}] = -1;
    }
  }
  // y in (k, p, s, d) order.
  for (auto& [key, idx] : m.y_lookup_) {
    const auto [k, p, s, d] = key;
    VarInfo v;
    v.kind = VarKind::kY;
    v.k = k;
    v.platform = p;
    v.slot = s;
    v.debris = d;
    idx = add_var(v, fmt::format("y_{}_{}_{}_{}", t_of(k), p, s, tegs[d].debris), 0.0);
  }
  m.z_base_.assign(L, std::vector<int>(P, 0));
  for (int k = 0; k < L; ++k) {
    for (int p = 0; p < P; ++p) {
      m.z_base_[k][p] = m.num_vars();
      const auto& pw = window.platforms[p];
      for (int e = 0; e < static_cast<int>(pw.edges[k].size()); ++e) {
        const auto& edge = pw.edges[k][e];
        VarInfo v;
        v.kind = VarKind::kZ;
        v.k = k;
        v.platform = p;
        v.slot = pw.slots[k][edge.from];
        v.to_slot = pw.slots[k + 1][edge.to];
        v.edge = e;
        v.cost = edge.cost;
        add_var(v, fmt::format("z_{}_{}_{}_{}", t_of(k), p, v.slot, v.to_slot), 0.0);
      }
    }
  }
  m.lower.assign(m.num_vars(), 0.0);
  m.upper.assign(m.num_vars(), 1.0);

  auto add_row = [&](RowFamily family, std::string name, lp::Sense sense, double rhs,
                     std::vector<std::pair<int, double>> terms) {
    ModelRow r;
    r.family = family;
    r.name = std::move(name);
    r.row.sense = sense;
    r.row.rhs = rhs;
    for (auto [i, a] : terms) {
      r.row.index.push_back(i);
      r.row.value.push_back(a);
    }
    m.rows.push_back(std::move(r));
  };

  // Debris path rows.
  for (int d = 0; d < D; ++d) {
    std::vector<std::pair<int, double>> terms;
    for (int j : tegs[d].layers[0][0].children) terms.emplace_back(m.x_index(0, d, j), 1.0);
    add_row(RowFamily::kDebrisRoot, fmt::format("root_{}_{}", t_of(0), tegs[d].debris),
            lp::Sense::kEq, 1.0, std::move(terms));
  }
  for (int k = 1; k < L; ++k) {
    for (int d = 0; d < D; ++d) {
      const auto& layer = tegs[d].layers[k];
      for (int i = 0; i < static_cast<int>(layer.size()); ++i) {
        std::vector<std::pair<int, double>> terms;
        for (int j : layer[i].children) terms.emplace_back(m.x_index(k, d, j), 1.0);
        terms.emplace_back(m.x_index(k - 1, d, i), -1.0);
        add_row(RowFamily::kDebrisFlow, fmt::format("flow_{}_{}_{}", t_of(k), tegs[d].debris, i),
                lp::Sense::kEq, 0.0, std::move(terms));
      }
    }
  }
  // Combo coupling.
  for (int k = 0; k < L; ++k) {
    for (int d = 0; d < D; ++d) {
      const auto& layer = tegs[d].layers[k + 1];
      for (int j = 0; j < static_cast<int>(layer.size()); ++j) {
        const auto& combo = layer[j].combo;
        if (combo.empty()) continue;
        std::vector<std::pair<int, double>> terms;
        for (const auto& a : combo) terms.emplace_back(*m.y_index(k, a.platform, a.slot, d), 1.0);
        terms.emplace_back(m.x_index(k, d, j), -static_cast<double>(combo.size()));
        add_row(RowFamily::kComboCoupling,
                fmt::format("combo_{}_{}_{}_{}", t_of(k), tegs[d].debris, layer[j].parent, j),
                lp::Sense::kGe, 0.0, std::move(terms));
      }
    }
  }
  // y terms grouped by (k, p) and (k, p, s).
  std::map<std::pair<int, int>, std::vector<int>> y_by_kp;
  std::map<std::tuple<int, int, int>, std::vector<int>> y_by_kps;
  std::map<std::pair<int, int>, std::vector<int>> y_by_kd;
  for (const auto& [key, idx] : m.y_lookup_) {
    const auto [k, p, s, d] = key;
    y_by_kp[{k, p}].push_back(idx);
    y_by_kps[{k, p, s}].push_back(idx);
    y_by_kd[{k, d}].push_back(idx);
  }
  for (int k = 0; k < L; ++k) {
    for (int p = 0; p < P; ++p) {
      const auto& pw = window.platforms[p];
      for (int pos = 0; pos < static_cast<int>(pw.slots[k].size()); ++pos) {
        const int s = pw.slots[k][pos];
        auto it = y_by_kps.find({k, p, s});
        if (it == y_by_kps.end()) continue;
        std::vector<std::pair<int, double>> terms;
        for (int idx : it->second) terms.emplace_back(idx, 1.0);
        for (int e = 0; e < static_cast<int>(pw.edges[k].size()); ++e)
          if (pw.edges[k][e].from == pos) terms.emplace_back(m.z_index(k, p, e), -1.0);
        add_row(RowFamily::kOccupancy, fmt::format("occupy_{}_{}_{}", t_of(k), p, s),
                lp::Sense::kLe, 0.0, std::move(terms));
      }
    }
  }
  for (int k = 0; k < L; ++k) {
    for (int p = 0; p < P; ++p) {
      auto it = y_by_kp.find({k, p});
      if (it == y_by_kp.end()) continue;
      std::vector<std::pair<int, double>> terms;
      for (int idx : it->second) terms.emplace_back(idx, 1.0);
      add_row(RowFamily::kSingleTarget, fmt::format("target_{}_{}", t_of(k), p), lp::Sense::kLe,
              1.0, terms);
      const auto& pw = window.platforms[p];
      for (int e = 0; e < static_cast<int>(pw.edges[k].size()); ++e) {
        const auto& edge = pw.edges[k][e];
        if (pw.slots[k][edge.from] != pw.slots[k + 1][edge.to])
          terms.emplace_back(m.z_index(k, p, e), 1.0);
      }
      add_row(RowFamily::kFireOrMove, fmt::format("fire_move_{}_{}", t_of(k), p),
              lp::Sense::kLe, 1.0, std::move(terms));
    }
  }
  // Platform path rows.
  for (int p = 0; p < P; ++p) {
    const auto& pw = window.platforms[p];
    std::vector<std::pair<int, double>> terms;
    for (int e = 0; e < static_cast<int>(pw.edges[0].size()); ++e)
      if (pw.edges[0][e].from == 0) terms.emplace_back(m.z_index(0, p, e), 1.0);
    add_row(RowFamily::kPlatformStart, fmt::format("start_{}_{}", t_of(0), p), lp::Sense::kEq,
            1.0, std::move(terms));
  }
  for (int k = 1; k < L; ++k) {
    for (int p = 0; p < P; ++p) {
      const auto& pw = window.platforms[p];
      for (int pos = 0; pos < static_cast<int>(pw.slots[k].size()); ++pos) {
        std::vector<std::pair<int, double>> terms;
        for (int e = 0; e < static_cast<int>(pw.edges[k].size()); ++e)
          if (pw.edges[k][e].from == pos) terms.emplace_back(m.z_index(k, p, e), 1.0);
        for (int e = 0; e < static_cast<int>(pw.edges[k - 1].size()); ++e)
          if (pw.edges[k - 1][e].to == pos) terms.emplace_back(m.z_index(k - 1, p, e), -1.0);
        add_row(RowFamily::kPlatformFlow,
                fmt::format("path_{}_{}_{}", t_of(k), p, pw.slots[k][pos]), lp::Sense::kEq, 0.0,
                std::move(terms));
      }
    }
  }
  for (int p = 0; p < P; ++p) {
    std::vector<std::pair<int, double>> terms;
    for (int k = 0; k < L; ++k) {
      const auto& edges = window.platforms[p].edges[k];
      for (int e = 0; e < static_cast<int>(edges.size()); ++e)
        if (edges[e].cost > 0) terms.emplace_back(m.z_index(k, p, e), edges[e].cost);
    }
    if (terms.empty()) continue;
    add_row(RowFamily::kBudget, fmt::format("budget_{}", p), lp::Sense::kLe, window.budgets[p],
            std::move(terms));
  }
  if (options.strict_consistency) {
    for (int k = 0; k < L; ++k) {
      for (int d = 0; d < D; ++d) {
        auto it = y_by_kd.find({k, d});
        if (it == y_by_kd.end()) continue;
        std::vector<std::pair<int, double>> terms;
        for (int idx : it->second) terms.emplace_back(idx, 1.0);
        const auto& layer = tegs[d].layers[k + 1];
        for (int j = 0; j < static_cast<int>(layer.size()); ++j)
          if (!layer[j].combo.empty())
            terms.emplace_back(m.x_index(k, d, j), -static_cast<double>(layer[j].combo.size()));
        add_row(RowFamily::kConsistency,
                fmt::format("consistency_{}_{}", t_of(k), tegs[d].debris), lp::Sense::kEq, 0.0,
                std::move(terms));
      }
    }
  }
  return m;
}

// Pins every platform to its stay-in-place edges (the non-reconfigurable case).
inline void fix_platforms_in_place(IlpModel& model) {
  for (int i = 0; i < model.num_vars(); ++i) {
    const auto& v = model.vars[i];
    if (v.kind == VarKind::kZ && v.slot != v.to_slot) model.upper[i] = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Binary branch and bound.

enum class SolveStatus { kOptimal, kInfeasible, kCapExceeded };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kCapExceeded: return "cap-exceeded";
  }
  return "?";
}

struct SolveOptions {
  double time_limit = std::numeric_limits<double>::infinity();  // seconds
  // Among optimal schedules prefer the one spending the least Delta-v.
  bool prefer_low_dv = true;
  long low_dv_node_limit = 200;
};

struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  double objective = 0;
  double bound = 0;
  double gap = 0;
  std::vector<int> values;      // 0/1 per variable
  std::vector<double> dv_used;  // per platform
  long nodes = 0;
};

namespace detail {

constexpr double kFeasTol = 1e-9;
constexpr double kIntTol = 1e-6;

inline double prune_tol(double incumbent) {
  return 1e-9 * std::max(1.0, std::abs(incumbent));
}

struct BinaryProgram {
  std::vector<double> objective;
  std::vector<lp::Row> rows;
  std::vector<double> lower, upper;
};

// Tightens 0/1 bounds by activity reasoning until nothing changes. Returns
// false when some row cannot be satisfied.
inline bool propagate(const std::vector<lp::Row>& rows, std::vector<double>& lo,
                      std::vector<double>& hi) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& row : rows) {
      double min_act = 0, max_act = 0;
      for (size_t k = 0; k < row.index.size(); ++k) {
        const double a = row.value[k];
        const int j = row.index[k];
        min_act += std::min(a * lo[j], a * hi[j]);
        max_act += std::max(a * lo[j], a * hi[j]);
      }
      const bool le = row.sense != lp::Sense::kGe, ge = row.sense != lp::Sense::kLe;
      if (le && min_act > row.rhs + kFeasTol) return false;
      if (ge && max_act < row.rhs - kFeasTol) return false;
      for (size_t k = 0; k < row.index.size(); ++k) {
        const int j = row.index[k];
        if (lo[j] == hi[j]) continue;
        const double a = row.value[k];
        const double at_lo = a * lo[j], at_hi = a * hi[j];
        const double mn = std::min(at_lo, at_hi), mx = std::max(at_lo, at_hi);
        // Which end of x_j is impossible?
        bool bad_lo = false, bad_hi = false;
        if (le) {
          if (min_act - mn + at_hi > row.rhs + kFeasTol) bad_hi = true;
          if (min_act - mn + at_lo > row.rhs + kFeasTol) bad_lo = true;
        }
        if (ge) {
          if (max_act - mx + at_hi < row.rhs - kFeasTol) bad_hi = true;
          if (max_act - mx + at_lo < row.rhs - kFeasTol) bad_lo = true;
        }
        if (bad_lo && bad_hi) return false;
        if (bad_hi) {
          hi[j] = lo[j];
          changed = true;
        } else if (bad_lo) {
          lo[j] = hi[j];
          changed = true;
        }
        if (bad_lo || bad_hi) {
          min_act = max_act = 0;
          for (size_t q = 0; q < row.index.size(); ++q) {
            const double b = row.value[q];
            const int i = row.index[q];
            min_act += std::min(b * lo[i], b * hi[i]);
            max_act += std::max(b * lo[i], b * hi[i]);
          }
        }
      }
    }
  }
  return true;
}

inline bool rows_satisfied(const std::vector<lp::Row>& rows, const std::vector<double>& x) {
  for (const auto& row : rows) {
    double act = 0;
    for (size_t k = 0; k < row.index.size(); ++k) act += row.value[k] * x[row.index[k]];
    if (row.sense != lp::Sense::kGe && act > row.rhs + kFeasTol) return false;
    if (row.sense != lp::Sense::kLe && act < row.rhs - kFeasTol) return false;
  }
  return true;
}

// LP over the variables still free under (lo, hi); fixed ones fold into rhs.
inline lp::Problem reduced_lp(const BinaryProgram& bp, const std::vector<double>& lo,
                              const std::vector<double>& hi, std::vector<int>& free_vars,
                              double& constant) {
  const int n = static_cast<int>(bp.objective.size());
  std::vector<int> local(n, -1);
  free_vars.clear();
  constant = 0;
  lp::Problem out;
  for (int j = 0; j < n; ++j) {
    if (lo[j] == hi[j]) {
      constant += bp.objective[j] * lo[j];
    } else {
      local[j] = static_cast<int>(free_vars.size());
      free_vars.push_back(j);
      out.objective.push_back(bp.objective[j]);
      out.lower.push_back(lo[j]);
      out.upper.push_back(hi[j]);
    }
  }
  for (const auto& row : bp.rows) {
    lp::Row r;
    r.sense = row.sense;
    r.rhs = row.rhs;
    for (size_t k = 0; k < row.index.size(); ++k) {
      const int j = row.index[k];
      if (local[j] < 0) {
        r.rhs -= row.value[k] * lo[j];
      } else {
        r.index.push_back(local[j]);
        r.value.push_back(row.value[k]);
      }
    }
    if (!r.index.empty()) out.rows.push_back(std::move(r));
  }
  return out;
}

struct BnbResult {
  SolveStatus status = SolveStatus::kInfeasible;
  double objective = -std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  std::vector<double> x;
  long nodes = 0;
};

// Best-bound search; nodes ordered by parent bound (desc) then creation id.
// Branches on the most fractional variable, lowest index on ties, up first.
inline BnbResult branch_and_bound(const BinaryProgram& bp,
                                  std::chrono::steady_clock::time_point deadline,
                                  long max_nodes = std::numeric_limits<long>::max()) {
  struct Node {
    double bound;
    long id;
    std::vector<double> lo, hi;
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id > b.id;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
  BnbResult res;
  long next_id = 0;
  open.push({std::numeric_limits<double>::infinity(), next_id++, bp.lower, bp.upper});
  bool have_incumbent = false;

  while (!open.empty()) {
    if (have_incumbent && open.top().bound <= res.objective + prune_tol(res.objective)) break;
    if (res.nodes >= max_nodes || std::chrono::steady_clock::now() > deadline) {
      res.status = SolveStatus::kCapExceeded;
      res.bound = open.top().bound;
      return res;
    }
    Node node = open.top();
    open.pop();
    ++res.nodes;
    if (!propagate(bp.rows, node.lo, node.hi)) continue;
    std::vector<int> free_vars;
    double constant = 0;
    const lp::Problem relax = reduced_lp(bp, node.lo, node.hi, free_vars, constant);
    std::vector<double> x = node.lo;
    double value = constant;
    if (!free_vars.empty()) {
      const lp::Result r = lp::solve(relax);
      if (r.status == lp::Status::kIterationLimit)
        throw ContractViolation("ilp", "LP relaxation hit its iteration limit");
      if (r.status != lp::Status::kOptimal) continue;
      value += r.objective;
      for (size_t q = 0; q < free_vars.size(); ++q) x[free_vars[q]] = r.x[q];
    } else if (!rows_satisfied(bp.rows, x)) {
      continue;
    }
    if (have_incumbent && value <= res.objective + prune_tol(res.objective)) continue;

    int branch = -1;
    double best_score = kIntTol;
    for (int j : free_vars) {
      const double f = x[j] - std::floor(x[j]);
      const double score = std::min(f, 1.0 - f);
      if (score > best_score) {
        best_score = score;
        branch = j;
      }
    }
    if (branch < 0) {
      std::vector<double> rounded(x.size());
      for (size_t j = 0; j < x.size(); ++j) rounded[j] = std::round(x[j]);
      if (!rows_satisfied(bp.rows, rounded)) continue;
      double obj = 0;
      for (size_t j = 0; j < x.size(); ++j) obj += bp.objective[j] * rounded[j];
      if (!have_incumbent || obj > res.objective) {
        res.objective = obj;
        res.x = std::move(rounded);
        have_incumbent = true;
      }
      continue;
    }
    Node up{value, next_id++, node.lo, node.hi};
    up.lo[branch] = up.hi[branch] = 1.0;
    Node down{value, next_id++, std::move(node.lo), std::move(node.hi)};
    down.lo[branch] = down.hi[branch] = 0.0;
    open.push(std::move(up));
    open.push(std::move(down));
  }
  res.status = have_incumbent ? SolveStatus::kOptimal : SolveStatus::kInfeasible;
  res.bound = res.objective;
  return res;
}

}  // namespace detail

// Exact solve. Presolve fixes what bound propagation can, the remaining free
// variables are split into independent components, and each component is
// solved by branch and bound.
inline Solution solve(const IlpModel& model, const SolveOptions& options = {}) {
  using clock = std::chrono::steady_clock;
  const auto deadline =
      std::isfinite(options.time_limit)
          ? clock::now() + std::chrono::duration_cast<clock::duration>(
                               std::chrono::duration<double>(options.time_limit))
          : clock::time_point::max();
  const int n = model.num_vars();
  std::vector<lp::Row> rows;
  // Only one node per debris layer is ever chosen, so a firing y covers the
  // sum of the combo edges that list it: y = sum x (strict) or y >= sum x.
  // Same 0/1 points as the combo and consistency rows, far tighter relaxation.
  const bool strict = model.count(RowFamily::kConsistency) > 0;
  std::map<int, std::vector<int>> covers;  // y -> x edges listing it
  for (const auto& r : model.rows) {
    if (r.family == RowFamily::kComboCoupling) {
      const int x = r.row.index.back();
      for (size_t k = 0; k + 1 < r.row.index.size(); ++k) covers[r.row.index[k]].push_back(x);
    } else if (r.family != RowFamily::kConsistency) {
      rows.push_back(r.row);
    }
  }
  for (const auto& [y, xs] : covers) {
    lp::Row r;
    r.sense = strict ? lp::Sense::kEq : lp::Sense::kGe;
    r.index.push_back(y);
    r.value.push_back(1.0);
    for (int x : xs) {
      r.index.push_back(x);
      r.value.push_back(-1.0);
    }
    rows.push_back(std::move(r));
  }
  std::vector<double> lo = model.lower, hi = model.upper;
  Solution sol;
  sol.dv_used.assign(model.num_platforms, 0.0);
  if (!detail::propagate(rows, lo, hi)) {
    sol.status = SolveStatus::kInfeasible;
    return sol;
  }

  // Union-find over free variables sharing a row.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  for (const auto& row : rows) {
    int first = -1;
    for (int j : row.index) {
      if (lo[j] == hi[j]) continue;
      if (first < 0) first = j;
      else parent[find(j)] = find(first);
    }
  }
  std::map<int, std::vector<int>> components;  // keyed by root; members ascending
  for (int j = 0; j < n; ++j)
    if (lo[j] != hi[j]) components[find(j)].push_back(j);
  std::vector<std::vector<int>> comps;
  for (auto& [root, members] : components) comps.push_back(std::move(members));
  std::sort(comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  std::vector<double> x(n);
  for (int j = 0; j < n; ++j) x[j] = lo[j];
  double bound_total = 0;
  bool capped = false;
  for (const auto& members : comps) {
    std::vector<int> local(n, -1);
    for (size_t q = 0; q < members.size(); ++q) local[members[q]] = static_cast<int>(q);
    detail::BinaryProgram bp;
    for (int j : members) {
      bp.objective.push_back(model.objective[j]);
      bp.lower.push_back(lo[j]);
      bp.upper.push_back(hi[j]);
    }
    for (const auto& row : rows) {
      lp::Row r;
      r.sense = row.sense;
      r.rhs = row.rhs;
      bool touches = false;
      for (size_t k = 0; k < row.index.size(); ++k) {
        const int j = row.index[k];
        if (local[j] >= 0) {
          touches = true;
          r.index.push_back(local[j]);
          r.value.push_back(row.value[k]);
        } else {
          r.rhs -= row.value[k] * lo[j];
        }
      }
      if (touches) bp.rows.push_back(std::move(r));
    }
    detail::BnbResult best = detail::branch_and_bound(bp, deadline);
    sol.nodes += best.nodes;
    if (best.status == SolveStatus::kInfeasible) {
      sol.status = SolveStatus::kInfeasible;
      return sol;
    }
    if (best.status == SolveStatus::kCapExceeded) {
      capped = true;
      if (best.x.empty()) {
        // No incumbent for this component: fall back to lower bounds is not
        // feasible in general, so report the cap without a schedule.
        sol.status = SolveStatus::kCapExceeded;
        sol.gap = std::numeric_limits<double>::infinity();
        return sol;
      }
      bound_total += best.bound;
    } else {
      bound_total += best.objective;
    }

    double spent = 0;
    for (size_t q = 0; q < members.size(); ++q)
      if (model.vars[members[q]].kind == VarKind::kZ) spent += model.vars[members[q]].cost * best.x[q];
    if (options.prefer_low_dv && spent > 0 && best.status == SolveStatus::kOptimal) {
      detail::BinaryProgram second = bp;
      lp::Row keep;
      keep.sense = lp::Sense::kGe;
      keep.rhs = best.objective - detail::prune_tol(best.objective);
      for (size_t q = 0; q < members.size(); ++q) {
        second.objective[q] = 0;
        if (model.objective[members[q]] != 0) {
          keep.index.push_back(static_cast<int>(q));
          keep.value.push_back(model.objective[members[q]]);
        }
        if (model.vars[members[q]].kind == VarKind::kZ)
          second.objective[q] = -model.vars[members[q]].cost;
      }
      if (!keep.index.empty()) second.rows.push_back(std::move(keep));
      // Cheaper schedule is a nicety; a capped search keeps its incumbent.
      const detail::BnbResult alt =
          detail::branch_and_bound(second, deadline, options.low_dv_node_limit);
      sol.nodes += alt.nodes;
      if (!alt.x.empty() && -alt.objective < spent) {
        double reward = 0;
        for (size_t q = 0; q < members.size(); ++q) reward += bp.objective[q] * alt.x[q];
        if (reward >= best.objective - detail::prune_tol(best.objective)) best.x = alt.x;
      }
    }
    for (size_t q = 0; q < members.size(); ++q) x[members[q]] = best.x[q];
  }

  sol.values.resize(n);
  double fixed_part = 0;
  for (int j = 0; j < n; ++j) {
    sol.values[j] = x[j] > 0.5 ? 1 : 0;
    sol.objective += model.objective[j] * sol.values[j];
    if (lo[j] == hi[j]) fixed_part += model.objective[j] * lo[j];
    const auto& v = model.vars[j];
    if (v.kind == VarKind::kZ && sol.values[j]) sol.dv_used[v.platform] += v.cost;
  }
  if (capped) {
    sol.status = SolveStatus::kCapExceeded;
    sol.bound = bound_total + fixed_part;
    sol.gap = std::max(0.0, sol.bound - sol.objective);
  } else {
    sol.status = SolveStatus::kOptimal;
    sol.bound = sol.objective;
    sol.gap = 0;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Reading a solution back as a schedule.

struct FireAction {
  int platform = 0;
  int slot = 0;
  int debris = 0;  // position in the model
};

struct StepPlan {
  std::vector<int> platform_edge;  // per platform, index into edges[k]
  std::vector<FireAction> fires;
  std::vector<int> debris_node;  // per debris, node index in layer k + 1
};

inline std::vector<StepPlan> decode(const IlpModel& model, const Solution& sol,
                                    const GridWindow& window, std::span<const DebrisTeg> tegs) {
  if (sol.values.size() != model.vars.size())
    throw ContractViolation("ilp", "solution does not match the model");
  std::vector<StepPlan> plan(model.length);
  std::vector<int> current(model.num_debris, 0);
  for (int k = 0; k < model.length; ++k) {
    auto& step = plan[k];
    step.platform_edge.assign(model.num_platforms, -1);
    step.debris_node.assign(model.num_debris, -1);
    for (int p = 0; p < model.num_platforms; ++p) {
      for (int e = 0; e < static_cast<int>(window.platforms[p].edges[k].size()); ++e) {
        if (sol.values[model.z_index(k, p, e)]) {
          if (step.platform_edge[p] >= 0)
            throw ContractViolation("ilp", "platform selects two transfers in one step");
          step.platform_edge[p] = e;
        }
      }
      if (step.platform_edge[p] < 0)
        throw ContractViolation("ilp", "platform selects no transfer");
    }
    for (int d = 0; d < model.num_debris; ++d) {
      for (int j : tegs[d].layers[k][current[d]].children) {
        if (sol.values[model.x_index(k, d, j)]) {
          if (step.debris_node[d] >= 0)
            throw ContractViolation("ilp", "debris follows two edges in one step");
          step.debris_node[d] = j;
        }
      }
      if (step.debris_node[d] < 0) throw ContractViolation("ilp", "debris path is broken");
      current[d] = step.debris_node[d];
    }
  }
  for (int i = 0; i < model.num_vars(); ++i) {
    const auto& v = model.vars[i];
    if (v.kind == VarKind::kY && sol.values[i])
      plan[v.k].fires.push_back({v.platform, v.slot, v.debris});
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle for tiny windows. Walks every joint platform path and
// firing pattern step by step, following the debris graphs.

struct BruteForceOptions {
  bool strict_consistency = true;
  long guard = 10'000'000;
};

struct BruteForceResult {
  double objective = 0;
  std::vector<StepPlan> plan;
  long visited = 0;
};

inline BruteForceResult brute_force_solve(const GridWindow& window,
                                          std::span<const DebrisTeg> tegs,
                                          const BruteForceOptions& options = {}) {
  for (const auto& teg : tegs)
    if (teg.start_step != window.start_step || teg.length() != window.length)
      throw InvalidInput("ilp", "debris graph does not span the platform window");
  const int P = window.num_platforms(), D = static_cast<int>(tegs.size());
  const int L = window.length;
  BruteForceResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  std::vector<int> pos(P, 0), node(D, 0);
  std::vector<double> spent(P, 0.0);
  std::vector<StepPlan> plan(L);
  long visited = 0;

  std::function<void(int, double)> step_rec;

  // Per-step choice: platform options are (edge, target) with target -1 for
  // no firing; firing requires the stay edge.
  auto expand = [&](int k, double acc) {
    std::vector<std::vector<std::pair<int, int>>> choices(P);
    for (int p = 0; p < P; ++p) {
      const auto& pw = window.platforms[p];
      for (int e = 0; e < static_cast<int>(pw.edges[k].size()); ++e) {
        const auto& edge = pw.edges[k][e];
        if (edge.from != pos[p]) continue;
        if (spent[p] + edge.cost > window.budgets[p] + detail::kFeasTol) continue;
        choices[p].emplace_back(e, -1);
        if (pw.slots[k][edge.from] != pw.slots[k + 1][edge.to]) continue;
        const int s = pw.slots[k][pos[p]];
        for (int d = 0; d < D; ++d) {
          bool useful = false;
          for (int j : tegs[d].layers[k][node[d]].children)
            for (const auto& a : tegs[d].layers[k + 1][j].combo)
              useful = useful || (a.platform == p && a.slot == s);
          if (useful) choices[p].emplace_back(e, d);
        }
      }
    }
    std::vector<std::pair<int, int>> pick(P);
    std::function<void(int)> platforms_rec = [&](int p) {
      if (p < P) {
        for (const auto& c : choices[p]) {
          pick[p] = c;
          platforms_rec(p + 1);
        }
        return;
      }
      // Engaged set per debris.
      std::vector<Combo> engaged(D);
      for (int q = 0; q < P; ++q)
        if (pick[q].second >= 0)
          engaged[pick[q].second].push_back({q, window.platforms[q].slots[k][pos[q]]});
      std::vector<std::vector<int>> options_d(D);
      for (int d = 0; d < D; ++d) {
        std::sort(engaged[d].begin(), engaged[d].end());
        for (int j : tegs[d].layers[k][node[d]].children) {
          const Combo& combo = tegs[d].layers[k + 1][j].combo;
          const bool ok = options.strict_consistency
                              ? combo == engaged[d]
                              : std::includes(engaged[d].begin(), engaged[d].end(),
                                              combo.begin(), combo.end());
          if (ok) options_d[d].push_back(j);
        }
        if (options_d[d].empty()) return;
      }
      std::vector<int> saved_pos = pos, saved_node = node;
      std::vector<double> saved_spent = spent;
      StepPlan sp;
      sp.platform_edge.resize(P);
      for (int q = 0; q < P; ++q) {
        const auto& edge = window.platforms[q].edges[k][pick[q].first];
        sp.platform_edge[q] = pick[q].first;
        pos[q] = edge.to;
        spent[q] += edge.cost;
        if (pick[q].second >= 0)
          sp.fires.push_back({q, window.platforms[q].slots[k][saved_pos[q]], pick[q].second});
      }
      std::vector<int> chosen(D);
      std::function<void(int, double)> debris_rec = [&](int d, double gain) {
        if (d < D) {
          for (int j : options_d[d]) {
            chosen[d] = j;
            debris_rec(d + 1, gain + tegs[d].layers[k + 1][j].reward);
          }
          return;
        }
        for (int q = 0; q < D; ++q) node[q] = chosen[q];
        sp.debris_node = chosen;
        plan[k] = sp;
        step_rec(k + 1, acc + gain);
        for (int q = 0; q < D; ++q) node[q] = saved_node[q];
      };
      debris_rec(0, 0.0);
      pos = saved_pos;
      spent = saved_spent;
    };
    platforms_rec(0);
  };

  step_rec = [&](int k, double acc) {
    if (++visited > options.guard)
      throw GuardExceeded("ilp", "brute-force search space exceeds the guard");
    if (k == L) {
      if (acc > best.objective) {
        best.objective = acc;
        best.plan = plan;
      }
      return;
    }
    expand(k, acc);
  };
  step_rec(0, 0.0);
  best.visited = visited;
  if (!std::isfinite(best.objective))
    throw ContractViolation("ilp", "brute force found no feasible schedule");
  return best;
}

// ---------------------------------------------------------------------------
// LP text export (CPLEX LP format) and a reader for the same subset.

namespace detail {

inline void wrap_terms(std::ostringstream& out, const std::string& head,
                       const std::vector<std::string>& terms, const std::string& tail) {
  std::string line = head;
  for (const auto& t : terms) {
    if (line.size() + t.size() + 1 > 250) {
      out << line << '\n';
      line = "   ";
    }
    line += ' ' + t;
  }
  if (line.size() + tail.size() + 1 > 250) {
    out << line << '\n';
    line = "   ";
  }
  out << line << ' ' << tail << '\n';
}

inline std::string term(double coef, const std::string& name, bool first) {
  const char sign = coef < 0 ? '-' : '+';
  const double mag = std::abs(coef);
  std::string s = first && sign == '+' ? "" : std::string(1, sign) + " ";
  if (mag != 1.0) s += fmt::format("{:.17g} ", mag);
  return s + name;
}

}  // namespace detail

inline std::string export_model(const IlpModel& model) {
  std::ostringstream out;
  out << fmt::format("\\ engagement schedule, steps {}..{}\n", model.start_step,
                     model.start_step + model.length);
  out << "Maximize\n";
  std::vector<std::string> terms;
  for (int j = 0; j < model.num_vars(); ++j)
    if (model.objective[j] != 0)
      terms.push_back(detail::term(model.objective[j], model.names[j], terms.empty()));
  if (terms.empty() && model.num_vars() > 0) terms.push_back("0 " + model.names[0]);
  detail::wrap_terms(out, " obj:", terms, "");
  out << "Subject To\n";
  for (const auto& r : model.rows) {
    terms.clear();
    for (size_t k = 0; k < r.row.index.size(); ++k)
      terms.push_back(detail::term(r.row.value[k], model.names[r.row.index[k]], k == 0));
    const char* op = r.row.sense == lp::Sense::kLe ? "<=" : r.row.sense == lp::Sense::kGe ? ">=" : "=";
    detail::wrap_terms(out, " " + r.name + ":", terms, fmt::format("{} {:.17g}", op, r.row.rhs));
  }
  out << "Bounds\n";
  for (int j = 0; j < model.num_vars(); ++j)
    if (model.lower[j] == model.upper[j])
      out << fmt::format(" {} = {:.17g}\n", model.names[j], model.lower[j]);
  out << "Binaries\n";
  std::string line;
  for (int j = 0; j < model.num_vars(); ++j) {
    if (line.size() + model.names[j].size() + 1 > 250) {
      out << line << '\n';
      line.clear();
    }
    line += ' ' + model.names[j];
  }
  if (!line.empty()) out << line << '\n';
  out << "End\n";
  return out.str();
}

struct LpText {
  bool maximize = true;
  std::map<std::string, double> objective;
  struct TextRow {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    lp::Sense sense = lp::Sense::kLe;
    double rhs = 0;
  };
  std::vector<TextRow> rows;
  std::map<std::string, double> fixed;
  std::vector<std::string> binaries;
};

inline LpText parse_lp(std::istream& in) {
  LpText lp_text;
  enum class Section { kNone, kObjective, kRows, kBounds, kBinaries, kEnd } section = Section::kNone;
  std::string statement;
  std::vector<std::string> statements;
  std::string line;
  auto tokens_of = [](const std::string& s) {
    std::istringstream ss(s);
    std::vector<std::string> out;
    for (std::string t; ss >> t;) out.push_back(t);
    return out;
  };
  auto parse_expr = [](const std::vector<std::string>& toks, size_t begin, size_t end) {
    std::vector<std::pair<std::string, double>> terms;
    double sign = 1, coef = 1;
    bool have_coef = false;
    for (size_t i = begin; i < end; ++i) {
      const std::string& t = toks[i];
      if (t == "+") {
        sign = 1;
      } else if (t == "-") {
        sign = -1;
      } else if (!t.empty() && (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '.')) {
        coef = std::stod(t);
        have_coef = true;
      } else {
        terms.emplace_back(t, sign * (have_coef ? coef : 1.0));
        sign = 1;
        coef = 1;
        have_coef = false;
      }
    }
    return terms;
  };
  auto flush = [&](Section sec) {
    if (statement.empty()) return;
    auto toks = tokens_of(statement);
    statement.clear();
    if (toks.empty()) return;
    if (sec == Section::kObjective) {
      size_t b = toks[0].back() == ':' ? 1 : 0;
      for (auto& [n, c] : parse_expr(toks, b, toks.size())) lp_text.objective[n] += c;
    } else if (sec == Section::kRows) {
      LpText::TextRow row;
      size_t b = 0;
      if (toks[0].back() == ':') {
        row.name = toks[0].substr(0, toks[0].size() - 1);
        b = 1;
      }
      size_t op = b;
      while (op < toks.size() && toks[op] != "<=" && toks[op] != ">=" && toks[op] != "=") ++op;
      if (op + 1 >= toks.size()) throw InvalidInput("ilp", "malformed LP row: " + row.name);
      row.terms = parse_expr(toks, b, op);
      row.sense = toks[op] == "<=" ? lp::Sense::kLe : toks[op] == ">=" ? lp::Sense::kGe : lp::Sense::kEq;
      row.rhs = std::stod(toks[op + 1]);
      lp_text.rows.push_back(std::move(row));
    }
  };
  while (std::getline(in, line)) {
    if (auto c = line.find('\\'); c != std::string::npos) line.erase(c);
    auto toks = tokens_of(line);
    if (toks.empty()) continue;
    const bool indented = std::isspace(static_cast<unsigned char>(line[0]));
    if (!indented) {
      std::string head = toks[0];
      std::transform(head.begin(), head.end(), head.begin(), ::tolower);
      if (toks.size() == 2) {
        std::string second = toks[1];
        std::transform(second.begin(), second.end(), second.begin(), ::tolower);
        head += " " + second;
      }
      Section next = Section::kNone;
      if (head == "maximize" || head == "minimize") next = Section::kObjective;
      else if (head == "subject to") next = Section::kRows;
      else if (head == "bounds") next = Section::kBounds;
      else if (head == "binaries" || head == "binary") next = Section::kBinaries;
      else if (head == "end") next = Section::kEnd;
      if (next != Section::kNone) {
        flush(section);
        if (head == "minimize") lp_text.maximize = false;
        section = next;
        continue;
      }
    }
    switch (section) {
      case Section::kObjective:
        statement += ' ' + line;
        break;
      case Section::kRows: {
        // A new row starts with "name:"; otherwise the line continues one.
        if (toks[0].back() == ':') flush(section);
        statement += ' ' + line;
        break;
      }
      case Section::kBounds:
        if (toks.size() == 3 && toks[1] == "=") lp_text.fixed[toks[0]] = std::stod(toks[2]);
        break;
      case Section::kBinaries:
        lp_text.binaries.insert(lp_text.binaries.end(), toks.begin(), toks.end());
        break;
      default:
        break;
    }
  }
  flush(section);
  return lp_text;
}

inline nlohmann::json solution_json(const IlpModel& model, const Solution& sol) {
  nlohmann::json j;
  j["start_step"] = model.start_step;
  j["length"] = model.length;
  j["status"] = to_string(sol.status);
  j["objective"] = sol.objective;
  j["gap"] = sol.gap;
  nlohmann::json vars = nlohmann::json::object();
  for (int i = 0; i < model.num_vars(); ++i)
    if (i < static_cast<int>(sol.values.size()) && sol.values[i]) vars[model.names[i]] = 1;
  j["variables"] = vars;
  j["dv_used_km_s"] = sol.dv_used;
  return j;
}

}  // namespace l2d
