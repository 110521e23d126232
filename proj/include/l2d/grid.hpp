// SPDX-License-Identifier: Apache-2.0
#pragma once

// Platform orbital-slot grids. A grid is a per-platform catalog of candidate
// orbits defined at the epoch; slot s at step t is catalog orbit s propagated
// to t. Slot 0 is always the platform's initial orbit and is the only slot
// that exists at t = 0. Staying in the same slot is free; any other edge costs
// the two-impulse Lambert transfer over one time step.
//
// A GridWindow is the part of the grid a scheduler window can actually use:
// starting from each platform's current slot, only slots reachable within the
// remaining Delta-v budget are kept, with every edge whose cost fits.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "l2d/astro.hpp"
#include "l2d/errors.hpp"

namespace l2d {

enum class RaanRule {
  kVerbatim,       // delta fed in radians, as printed
  kSphericalTrig,  // delta fed as cos(unscaled plane rotation angle)
};

enum class LayerDirection { kSymmetric, kUp, kDown };

// Catalog builders. Each returns the candidate orbits of one platform, slot 0
// first (the initial orbit itself).
namespace grid {

inline std::vector<KeplerianElements> baseline_catalog(
    const KeplerianElements& initial) {
  return {initial};
}

// Signed offset levels 0, +1, -1, +2, -2, ... for `count` (odd) entries.
inline std::vector<int> symmetric_levels(int count) {
  std::vector<int> levels{0};
  for (int k = 1; static_cast<int>(levels.size()) < count; ++k) {
    levels.push_back(k);
    if (static_cast<int>(levels.size()) < count) levels.push_back(-k);
  }
  return levels;
}

inline std::vector<KeplerianElements> phased(
    const std::vector<KeplerianElements>& planes, int n_phases) {
  std::vector<KeplerianElements> out;
  out.reserve(planes.size() * n_phases);
  for (const auto& plane : planes) {
    for (int k = 0; k < n_phases; ++k) {
      KeplerianElements el = plane;
      el.argument_of_latitude =
          astro::wrap_deg(plane.argument_of_latitude + 360.0 * k / n_phases);
      out.push_back(el);
    }
  }
  return out;
}

struct PlaneOffsets {
  double inclination_deg = 0;
  double raan_deg = 0;
};

// Offsets used for the plane-change catalog, from the Delta-v budget.
inline PlaneOffsets plane_change_offsets(const KeplerianElements& initial,
                                         double dv_budget, double beta,
                                         RaanRule rule,
                                         const EarthConstants& earth = {}) {
  if (dv_budget == 0) return {};
  const auto inc = astro::max_inclination_change(
      dv_budget, initial.semi_major_axis, beta, earth);
  if (inc.saturated)
    throw InvalidInput("teg", "dv_budget: inclination bound saturated (budget " +
                                  std::to_string(dv_budget) + " km/s exceeds 2 v_circ)");
  double delta = inc.degrees * kDeg;
  if (rule == RaanRule::kSphericalTrig) delta = std::cos(delta / beta);
  const auto raan = astro::max_raan_change(delta, initial.inclination, beta);
  if (raan.saturated)
    throw InvalidInput("teg", "inclination: RAAN bound argument outside [-1, 1] "
                              "for inclination " +
                                  std::to_string(initial.inclination) + " deg");
  return {inc.degrees, raan.degrees};
}

// n_planes (odd) planes: the initial one, then symmetric pairs alternating
// inclination offsets and RAAN offsets; the outermost pair of each kind sits
// at the full bound. Each plane is phased in n_phases uniform steps.
inline std::vector<KeplerianElements> plane_change_catalog(
    const KeplerianElements& initial, double dv_budget, double beta,
    int n_phases, int n_planes, RaanRule rule = RaanRule::kSphericalTrig,
    const EarthConstants& earth = {}) {
  if (n_planes < 1 || n_planes % 2 == 0)
    throw InvalidInput("teg", "n_planes must be a positive odd count");
  if (n_phases < 1) throw InvalidInput("teg", "n_phases must be positive");
  if (!(dv_budget >= 0)) throw InvalidInput("teg", "dv_budget must be >= 0");
  const auto bound = plane_change_offsets(initial, dv_budget, beta, rule, earth);

  const int pairs = (n_planes - 1) / 2;
  const int inc_pairs = (pairs + 1) / 2;
  const int raan_pairs = pairs / 2;
  std::vector<KeplerianElements> planes{initial};
  int inc_seen = 0, raan_seen = 0;
  for (int k = 1; k <= pairs; ++k) {
    for (double sign : {1.0, -1.0}) {
      KeplerianElements el = initial;
      if (k % 2 == 1) {
        el.inclination += sign * bound.inclination_deg * (inc_seen + 1) / inc_pairs;
        if (el.inclination < 0 || el.inclination > 180)
          throw InvalidInput("teg", "inclination: offset plane leaves [0, 180] deg");
      } else {
        el.raan = astro::wrap_deg(el.raan +
                                  sign * bound.raan_deg * (raan_seen + 1) / raan_pairs);
      }
      planes.push_back(el);
    }
    (k % 2 == 1 ? inc_seen : raan_seen)++;
  }
  return phased(planes, n_phases);
}

inline std::vector<KeplerianElements> altitude_change_catalog(
    const KeplerianElements& initial, int n_phases, int n_layers,
    double layer_step_km, LayerDirection direction = LayerDirection::kSymmetric,
    const EarthConstants& earth = {}) {
  if (n_phases < 1) throw InvalidInput("teg", "n_phases must be positive");
  if (n_layers < 1) throw InvalidInput("teg", "n_layers must be positive");
  if (direction == LayerDirection::kSymmetric && n_layers % 2 == 0)
    throw InvalidInput("teg", "n_layers must be odd for symmetric layering");
  if (!(layer_step_km > 0) && n_layers > 1)
    throw InvalidInput("teg", "layer_step must be positive");
  std::vector<int> levels;
  if (direction == LayerDirection::kSymmetric) {
    levels = symmetric_levels(n_layers);
  } else {
    const int sign = direction == LayerDirection::kUp ? 1 : -1;
    for (int k = 0; k < n_layers; ++k) levels.push_back(sign * k);
  }
  std::vector<KeplerianElements> planes;
  for (int level : levels) {
    KeplerianElements el = initial;
    el.semi_major_axis += level * layer_step_km;
    if (el.semi_major_axis * (1.0 - el.eccentricity) <= earth.grazing_radius())
      throw InvalidInput("teg", "layer " + std::to_string(level) +
                                    ": periapsis below R_earth + grazing altitude");
    planes.push_back(el);
  }
  return phased(planes, n_phases);
}

}  // namespace grid

// Full-horizon slot grid for every platform.
class PlatformSlotGrid {
 public:
  PlatformSlotGrid(std::vector<std::vector<KeplerianElements>> catalogs,
                   double step_seconds, EarthConstants earth = {})
      : catalogs_(std::move(catalogs)), step_seconds_(step_seconds), earth_(earth) {
    if (!(step_seconds_ > 0)) throw InvalidInput("teg", "step length must be positive");
    epoch_states_.resize(catalogs_.size());
    for (size_t p = 0; p < catalogs_.size(); ++p) {
      if (catalogs_[p].empty()) throw InvalidInput("teg", "empty slot catalog");
      for (const auto& el : catalogs_[p])
        epoch_states_[p].push_back(astro::elements_to_state(el, earth_));
    }
  }

  int num_platforms() const { return static_cast<int>(catalogs_.size()); }
  int catalog_size(int p) const { return static_cast<int>(catalogs_[p].size()); }
  // S_tp: only the initial slot exists at the epoch.
  int num_slots(int p, int t) const { return t == 0 ? 1 : catalog_size(p); }
  double step_seconds() const { return step_seconds_; }
  const EarthConstants& earth() const { return earth_; }
  const KeplerianElements& elements(int p, int s) const { return catalogs_[p][s]; }

  StateVector state(int p, int t, int s) const {
    return astro::propagate_two_body(epoch_states_[p][s], t * step_seconds_, earth_);
  }

  // c^p_tsw. Zero for the same slot; +inf when no Lambert arc exists.
  double cost(int p, int t, int s, int w) const {
    if (s == w) return 0.0;
    return astro::transfer_cost(state(p, t, s), state(p, t + 1, w), step_seconds_,
                                earth_);
  }

 private:
  std::vector<std::vector<KeplerianElements>> catalogs_;
  std::vector<std::vector<StateVector>> epoch_states_;
  double step_seconds_;
  EarthConstants earth_;
};

// Memo for Lambert edge costs across overlapping scheduler windows.
class EdgeCostCache {
 public:
  double get_or_compute(const PlatformSlotGrid& grid, int p, int t, int s, int w) {
    const Key key{p, t, s, w};
    if (auto it = costs_.find(key); it != costs_.end()) return it->second;
    const double c = grid.cost(p, t, s, w);
    costs_.emplace(key, c);
    return c;
  }
  // Drops entries for steps before `t` (windows only move forward).
  void evict_before(int t) {
    for (auto it = costs_.begin(); it != costs_.end();) {
      if (std::get<1>(it->first) < t) it = costs_.erase(it);
      else ++it;
    }
  }
  size_t size() const { return costs_.size(); }

 private:
  using Key = std::tuple<int, int, int, int>;
  std::map<Key, double> costs_;
};

struct SlotEdge {
  int from = 0;  // position within layer k
  int to = 0;    // position within layer k + 1
  double cost = 0;
};

struct PlatformWindow {
  // layers[k]: slot ids available at step start + k (k = 0..length).
  std::vector<std::vector<int>> slots;
  std::vector<std::vector<StateVector>> states;
  // edges[k]: transfers from layer k to layer k + 1.
  std::vector<std::vector<SlotEdge>> edges;

  int position_of(int k, int slot) const {
    const auto& layer = slots[k];
    auto it = std::find(layer.begin(), layer.end(), slot);
    return it == layer.end() ? -1 : static_cast<int>(it - layer.begin());
  }
};

struct GridWindow {
  int start_step = 0;
  int length = 0;  // number of transitions
  double step_seconds = 0;
  std::vector<PlatformWindow> platforms;
  std::vector<double> budgets;  // remaining c_max per platform

  int num_platforms() const { return static_cast<int>(platforms.size()); }
};

struct WindowOptions {
  // Pairs whose natural-motion separation after one step exceeds
  // factor * step * remaining budget are not sent to the Lambert solver.
  double screen_factor = 2.0;
};

// Builds the reachable sub-grid for steps [start, start + length] given each
// platform's current slot and remaining budget.
inline GridWindow extract_window(const PlatformSlotGrid& grid, int start, int length,
                                 std::span<const int> current_slots,
                                 std::span<const double> budgets,
                                 EdgeCostCache* cache = nullptr,
                                 const WindowOptions& options = {}) {
  if (length < 1) throw InvalidInput("teg", "window length must be >= 1");
  if (static_cast<int>(current_slots.size()) != grid.num_platforms() ||
      static_cast<int>(budgets.size()) != grid.num_platforms())
    throw InvalidInput("teg", "per-platform inputs do not match the grid");
  GridWindow window;
  window.start_step = start;
  window.length = length;
  window.step_seconds = grid.step_seconds();
  window.budgets.assign(budgets.begin(), budgets.end());
  const double tof = grid.step_seconds();

  for (int p = 0; p < grid.num_platforms(); ++p) {
    PlatformWindow pw;
    const int s0 = current_slots[p];
    if (s0 < 0 || s0 >= grid.num_slots(p, start))
      throw InvalidInput("teg", "current slot does not exist at the window start");
    const double budget = budgets[p];
    pw.slots.push_back({s0});
    pw.states.push_back({grid.state(p, start, s0)});
    std::vector<double> reach_cost{0.0};

    for (int k = 0; k < length; ++k) {
      const int t = start + k;
      const int n_next = grid.num_slots(p, t + 1);
      std::vector<double> next_cost(n_next, kInf);
      std::vector<std::tuple<int, int, double>> raw;  // from position, to slot, cost
      std::vector<StateVector> next_states(n_next);
      std::vector<bool> have_state(n_next, false);
      auto state_at_next = [&](int w) -> const StateVector& {
        if (!have_state[w]) {
          next_states[w] = grid.state(p, t + 1, w);
          have_state[w] = true;
        }
        return next_states[w];
      };
      for (size_t i = 0; i < pw.slots[k].size(); ++i) {
        const int s = pw.slots[k][i];
        const double left = budget - reach_cost[i];
        // Natural motion of slot s over the step is slot s itself at t + 1.
        const Vec3 coast = s < n_next ? state_at_next(s).r
                                      : astro::propagate_two_body(pw.states[k][i], tof,
                                                                  grid.earth()).r;
        for (int w = 0; w < n_next; ++w) {
          double c;
          if (w == s) {
            c = 0.0;
          } else {
            if ((state_at_next(w).r - coast).norm() > options.screen_factor * tof * left)
              continue;
            c = cache ? cache->get_or_compute(grid, p, t, s, w) : grid.cost(p, t, s, w);
          }
          if (!std::isfinite(c) || reach_cost[i] + c > budget + 1e-12) continue;
          raw.emplace_back(static_cast<int>(i), w, c);
          next_cost[w] = std::min(next_cost[w], reach_cost[i] + c);
        }
      }
      std::vector<int> layer;
      std::vector<int> position(n_next, -1);
      for (int w = 0; w < n_next; ++w) {
        if (std::isfinite(next_cost[w])) {
          position[w] = static_cast<int>(layer.size());
          layer.push_back(w);
        }
      }
      std::vector<StateVector> layer_states;
      std::vector<double> layer_cost;
      for (int w : layer) {
        layer_states.push_back(state_at_next(w));
        layer_cost.push_back(next_cost[w]);
      }
      std::vector<SlotEdge> edges;
      for (const auto& [from, w, c] : raw) edges.push_back({from, position[w], c});
      pw.slots.push_back(std::move(layer));
      pw.states.push_back(std::move(layer_states));
      pw.edges.push_back(std::move(edges));
      reach_cost = std::move(layer_cost);
    }
    window.platforms.push_back(std::move(pw));
  }
  return window;
}

}  // namespace l2d
