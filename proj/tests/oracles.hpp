// Independent reference computations for the tests. Nothing here calls into
// the library's physics; formulas are written out from scratch, often in a
// different algebraic form, so agreement means something.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "l2d/l2d.hpp"

namespace oracle {

using l2d::Vec3;

constexpr double kMu = 398600.4418;
constexpr double kRe = 6378.137;
constexpr double kPi = 3.14159265358979323846;
constexpr double kD2R = kPi / 180.0;

struct State {
  Vec3 r, v;
};

// Vis-viva semi-major axis and e from |h|: r_p = a (1 - e).
inline double periapsis(const Vec3& r, const Vec3& v, double mu = kMu) {
  const double a = 1.0 / (2.0 / r.norm() - v.squaredNorm() / mu);
  const double h2 = r.cross(v).squaredNorm();
  const double e = std::sqrt(std::max(0.0, 1.0 - h2 / (mu * a)));
  return a * (1.0 - e);
}

// Kepler propagation with Newton iteration on the eccentric (or hyperbolic)
// anomaly.
inline State kepler(const Vec3& r0, const Vec3& v0, double dt, double mu = kMu) {
  const double rn = r0.norm();
  const double a = 1.0 / (2.0 / rn - v0.squaredNorm() / mu);
  const Vec3 h = r0.cross(v0);
  const Vec3 w = h.normalized();
  const Vec3 evec = v0.cross(h) / mu - r0 / rn;
  double e = evec.norm();
  Vec3 P, Q;
  double nu = 0;
  if (e < 1e-11) {
    e = 0;
    P = r0 / rn;
  } else {
    P = evec / e;
    nu = std::atan2(r0.dot(w.cross(P)), r0.dot(P));
  }
  Q = w.cross(P);
  if (a < 0) {
    const double A = -a;
    const double F0 = 2.0 * std::atanh(std::sqrt((e - 1) / (e + 1)) * std::tan(nu / 2));
    const double M = e * std::sinh(F0) - F0 + std::sqrt(mu / (A * A * A)) * dt;
    double F = std::asinh(M / e);
    for (int i = 0; i < 200; ++i) {
      const double step = (e * std::sinh(F) - F - M) / (e * std::cosh(F) - 1);
      F -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(F))) break;
    }
    const double b = A * std::sqrt(e * e - 1);
    const Vec3 r = A * (e - std::cosh(F)) * P + b * std::sinh(F) * Q;
    const double k = std::sqrt(mu * A) / r.norm();
    return {r, k * (-std::sinh(F) * P + std::sqrt(e * e - 1) * std::cosh(F) * Q)};
  }
  const double E0 =
      2.0 * std::atan2(std::sqrt(1 - e) * std::sin(nu / 2), std::sqrt(1 + e) * std::cos(nu / 2));
  const double n = std::sqrt(mu / (a * a * a));
  const double M = E0 - e * std::sin(E0) + n * dt;
  double E = e > 0.8 ? kPi : M;
  for (int i = 0; i < 100; ++i) {
    const double step = (E - e * std::sin(E) - M) / (1 - e * std::cos(E));
    E -= step;
    if (std::abs(step) < 1e-15) break;
  }
  const double b = a * std::sqrt(1 - e * e);
  const Vec3 r = a * (std::cos(E) - e) * P + b * std::sin(E) * Q;
  const Vec3 v = std::sqrt(mu * a) / r.norm() * (-std::sin(E) * P + std::sqrt(1 - e * e) * std::cos(E) * Q);
  return {r, v};
}

// Circular-orbit state from (a, i, raan, u) by explicit rotation matrix terms.
inline State circular(double a, double inc_deg, double raan_deg, double u_deg, double mu = kMu) {
  const double i = inc_deg * kD2R, O = raan_deg * kD2R, u = u_deg * kD2R;
  const Vec3 r = a * Vec3(std::cos(O) * std::cos(u) - std::sin(O) * std::sin(u) * std::cos(i),
                          std::sin(O) * std::cos(u) + std::cos(O) * std::sin(u) * std::cos(i),
                          std::sin(u) * std::sin(i));
  const double s = std::sqrt(mu / a);
  const Vec3 v = s * Vec3(-std::cos(O) * std::sin(u) - std::sin(O) * std::cos(u) * std::cos(i),
                          -std::sin(O) * std::sin(u) + std::cos(O) * std::cos(u) * std::cos(i),
                          std::cos(u) * std::sin(i));
  return {r, v};
}

// Spot diameter M^2 a lambda u / D, fluence = eta2 E / spot area.
inline double fluence(const l2d::LaserSystem& l, double u_km) {
  const double ds = l.beam_quality * l.diffraction_constant * l.wavelength * (u_km * 1000.0) /
                    l.mirror_diameter;
  return l.eta2 * l.pulse_energy / (kPi * ds * ds / 4.0);
}

// km/s along the line of sight.
inline Vec3 delta_v(const l2d::LaserSystem& l, const Vec3& platform, const Vec3& debris,
                    double mu_d) {
  const Vec3 los = debris - platform;
  const double u = los.norm();
  const double impulse_per_area = l.pulses_per_step * l.eta1 * (l.coupling / 1e6) * fluence(l, u);
  return los / u * (impulse_per_area / mu_d / 1000.0);
}

inline bool feasible(const Vec3& p, const Vec3& d, const l2d::LaserSystem& l,
                     double grazing = kRe + 100.0) {
  const double rp = p.norm(), rd = d.norm();
  if (rp <= grazing || rd <= grazing) return false;
  const double u = (d - p).norm();
  const double reach = std::sqrt(rp * rp - grazing * grazing) + std::sqrt(rd * rd - grazing * grazing);
  return u <= reach && u >= l.u_min && u <= l.u_max;
}

// RSW frame by Gram-Schmidt on the velocity.
inline bool in_ellipsoid(const Vec3& center_r, const Vec3& center_v, const Vec3& axes,
                         const Vec3& p) {
  const Vec3 R = center_r / center_r.norm();
  Vec3 S = center_v - center_v.dot(R) * R;
  S /= S.norm();
  const Vec3 W = R.cross(S);
  const Vec3 d = p - center_r;
  double q = 0;
  const double c[3] = {d.dot(R) / axes[0], d.dot(S) / axes[1], d.dot(W) / axes[2]};
  for (double x : c) q += x * x;
  return q <= 1.0;
}

// All nonempty subsets of `pairs` with distinct platforms, size <= k_max,
// sorted by size then lexicographically.
inline std::vector<l2d::Combo> powerset_combos(std::vector<l2d::SlotAssignment> pairs, int k_max) {
  std::sort(pairs.begin(), pairs.end());
  std::vector<l2d::Combo> out;
  const int n = static_cast<int>(pairs.size());
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    l2d::Combo c;
    for (int b = 0; b < n; ++b)
      if (mask & (1u << b)) c.push_back(pairs[b]);
    if (static_cast<int>(c.size()) > k_max) continue;
    bool distinct = true;
    for (size_t a = 0; a + 1 < c.size(); ++a)
      for (size_t b = a + 1; b < c.size(); ++b) distinct = distinct && c[a].platform != c[b].platform;
    if (distinct) out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](const l2d::Combo& a, const l2d::Combo& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

struct Spacecraft {
  State epoch;
  Vec3 axes;
};

struct RewardOut {
  double value = 0;
  bool deorbit = false;
};

inline RewardOut reward(const State& pre, const State& post, int t, double r_deorbit,
                        double alpha, double step_s, const std::vector<Spacecraft>& active) {
  RewardOut out;
  const double before = periapsis(pre.r, pre.v);
  const double after = periapsis(post.r, post.v);
  if (after >= before) return out;
  double gamma;
  if (after <= r_deorbit) {
    gamma = 100;
    out.deorbit = true;
  } else {
    gamma = std::pow(r_deorbit / after, 3);
  }
  double penalty = 0;
  if (!active.empty()) {
    const State next = kepler(post.r, post.v, step_s);
    for (const auto& sc : active) {
      const State c = kepler(sc.epoch.r, sc.epoch.v, (t + 1) * step_s);
      if (in_ellipsoid(c.r, c.v, sc.axes, next.r)) {
        penalty = -alpha;
        break;
      }
    }
  }
  out.value = gamma + penalty;
  return out;
}

// Graph expansion written out directly. Layer k + 1 lists, parent by parent, the
// continuation and then each accepted combination.
struct Node {
  int parent = -1;
  enum Kind { kActive, kGone, kWaiting } kind = kActive;
  State s;
  double reward = 0;
  l2d::Combo combo;
};

struct Body {
  State at_appear;
  int appear = 0;
  double mu_d = 0.2;
};

inline std::vector<std::vector<Node>> expand_graph(const Body& body, const Node& root,
                                                   const l2d::GridWindow& w,
                                                   const l2d::LaserSystem& laser, int k_max,
                                                   double r_deorbit, double alpha,
                                                   const std::vector<Spacecraft>& active) {
  const double dt = w.step_seconds;
  std::vector<std::vector<Node>> layers{{root}};
  for (int k = 0; k < w.length; ++k) {
    const int t = w.start_step + k;
    std::vector<Node> next;
    for (int i = 0; i < static_cast<int>(layers[k].size()); ++i) {
      const Node& n = layers[k][i];
      Node c;
      c.parent = i;
      if (n.kind == Node::kGone) {
        c.kind = Node::kGone;
        next.push_back(c);
        continue;
      }
      if (n.kind == Node::kWaiting) {
        if (t + 1 >= body.appear) {
          c.kind = Node::kActive;
          c.s = kepler(body.at_appear.r, body.at_appear.v, (t + 1 - body.appear) * dt);
        } else {
          c.kind = Node::kWaiting;
        }
        next.push_back(c);
        continue;
      }
      c.s = kepler(n.s.r, n.s.v, dt);
      next.push_back(c);
      std::vector<l2d::SlotAssignment> pairs;
      for (int p = 0; p < w.num_platforms(); ++p)
        for (size_t q = 0; q < w.platforms[p].slots[k].size(); ++q)
          if (feasible(w.platforms[p].states[k][q].r, n.s.r, laser))
            pairs.push_back({p, w.platforms[p].slots[k][q]});
      for (const auto& combo : powerset_combos(pairs, k_max)) {
        State post = n.s;
        for (const auto& a : combo) {
          const auto& pw = w.platforms[a.platform];
          const int pos = static_cast<int>(
              std::find(pw.slots[k].begin(), pw.slots[k].end(), a.slot) - pw.slots[k].begin());
          post.v += delta_v(laser, pw.states[k][pos].r, n.s.r, body.mu_d);
        }
        if (!(periapsis(post.r, post.v) < periapsis(n.s.r, n.s.v))) continue;
        const RewardOut r = reward(n.s, post, t, r_deorbit, alpha, dt, active);
        Node e;
        e.parent = i;
        e.combo = combo;
        e.reward = r.value;
        if (r.deorbit) e.kind = Node::kGone;
        else e.s = kepler(post.r, post.v, dt);
        next.push_back(e);
      }
    }
    layers.push_back(std::move(next));
  }
  return layers;
}

// Best schedule value over a window by listing every budget-feasible platform
// path, then every firing pattern along it. The debris graphs are followed by
// matching the engaged set against each child's combination. With
// `stay_only`, platforms never leave their starting slot.
inline double schedule_max(const l2d::GridWindow& w, std::span<const l2d::DebrisTeg> tegs,
                           bool stay_only = false) {
  const int P = w.num_platforms(), D = static_cast<int>(tegs.size()), L = w.length;
  std::vector<std::vector<std::vector<int>>> paths(P);
  for (int p = 0; p < P; ++p) {
    const auto& pw = w.platforms[p];
    std::vector<int> cur;
    std::function<void(int, int, double)> walk = [&](int k, int at, double spent) {
      if (k == L) {
        paths[p].push_back(cur);
        return;
      }
      for (int e = 0; e < static_cast<int>(pw.edges[k].size()); ++e) {
        const auto& edge = pw.edges[k][e];
        if (edge.from != at || spent + edge.cost > w.budgets[p] + 1e-9) continue;
        if (stay_only && pw.slots[k][edge.from] != pw.slots[k + 1][edge.to]) continue;
        cur.push_back(e);
        walk(k + 1, edge.to, spent + edge.cost);
        cur.pop_back();
      }
    };
    walk(0, 0, 0.0);
  }
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> choice(P);
  std::function<void(int)> over_paths = [&](int p) {
    if (p < P) {
      for (int i = 0; i < static_cast<int>(paths[p].size()); ++i) {
        choice[p] = i;
        over_paths(p + 1);
      }
      return;
    }
    std::vector<int> at(D, 0);
    std::function<void(int, double)> over_steps = [&](int k, double acc) {
      if (k == L) {
        best = std::max(best, acc);
        return;
      }
      std::vector<int> target(P, -1);
      std::function<void(int)> over_targets = [&](int q) {
        if (q < P) {
          const auto& pw = w.platforms[q];
          const auto& edge = pw.edges[k][paths[q][choice[q]][k]];
          target[q] = -1;
          over_targets(q + 1);
          if (pw.slots[k][edge.from] != pw.slots[k + 1][edge.to]) return;
          for (int d = 0; d < D; ++d) {
            target[q] = d;
            over_targets(q + 1);
          }
          target[q] = -1;
          return;
        }
        std::vector<int> saved = at;
        double gain = 0;
        for (int d = 0; d < D; ++d) {
          l2d::Combo engaged;
          for (int r = 0; r < P; ++r)
            if (target[r] == d) {
              const auto& pw = w.platforms[r];
              engaged.push_back({r, pw.slots[k][pw.edges[k][paths[r][choice[r]][k]].from]});
            }
          std::sort(engaged.begin(), engaged.end());
          const auto& layer = tegs[d].layers[k + 1];
          int next = -1;
          for (int j = 0; j < static_cast<int>(layer.size()); ++j) {
            if (layer[j].parent != at[d]) continue;
            l2d::Combo c = layer[j].combo;
            std::sort(c.begin(), c.end());
            if (c == engaged) next = j;
          }
          if (next < 0) {
            at = saved;
            return;
          }
          at[d] = next;
          gain += layer[next].reward;
        }
        over_steps(k + 1, acc + gain);
        at = saved;
      };
      over_targets(0);
    };
    over_steps(0, 0.0);
  };
  over_paths(0);
  return best;
}

}  // namespace oracle
