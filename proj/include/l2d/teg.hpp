// SPDX-License-Identifier: Apache-2.0
#pragma once

// Debris time-expanded graphs. Each debris object gets a tree whose layer k
// holds the candidate states at step start + k. Every node spawns a
// "no engagement" continuation child with reward 0 plus one child per feasible
// cooperative engagement combination that strictly lowers its periapsis.
// Engagements reaching the deorbit threshold produce sentinel children.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "l2d/astro.hpp"
#include "l2d/errors.hpp"
#include "l2d/grid.hpp"
#include "l2d/pla.hpp"

namespace l2d {

// A debris object. It exists from `appear_step` on (breakup fragments appear
// mid-mission); `state_at_appearance` is its state at that step.
struct DebrisBody {
  int id = 0;
  double surface_density = 0.2;  // kg/m^2
  int appear_step = 0;
  StateVector state_at_appearance;
};

enum class NodeStatus { kActive, kDeorbited, kDormant };

struct DebrisStatus {
  NodeStatus status = NodeStatus::kActive;
  StateVector state;  // meaningful only when active

  static DebrisStatus deorbited() { return {NodeStatus::kDeorbited, StateVector::deorbited()}; }
  static DebrisStatus dormant() { return {NodeStatus::kDormant, StateVector::deorbited()}; }
  static DebrisStatus active(const StateVector& s) { return {NodeStatus::kActive, s}; }
  friend bool operator==(const DebrisStatus&, const DebrisStatus&) = default;
};

// Status of `debris` at absolute step `t` when it has never been engaged.
inline DebrisStatus natural_status(const DebrisBody& debris, int t, double step_seconds,
                                   const EarthConstants& earth = {}) {
  if (t < debris.appear_step) return DebrisStatus::dormant();
  return DebrisStatus::active(astro::propagate_two_body(
      debris.state_at_appearance, (t - debris.appear_step) * step_seconds, earth));
}

struct SlotAssignment {
  int platform = 0;
  int slot = 0;
  friend auto operator<=>(const SlotAssignment&, const SlotAssignment&) = default;
};

// (PS): platforms and the slots they must occupy, at most one slot each.
using Combo = std::vector<SlotAssignment>;

// A platform slot as seen at one step.
struct SlotView {
  int platform = 0;
  int slot = 0;
  Vec3 position;
};

// Views of every slot in layer k of a window, platform-major.
inline std::vector<SlotView> window_layer_views(const GridWindow& window, int k) {
  std::vector<SlotView> views;
  for (int p = 0; p < window.num_platforms(); ++p) {
    const auto& pw = window.platforms[p];
    for (size_t i = 0; i < pw.slots[k].size(); ++i)
      views.push_back({p, pw.slots[k][i], pw.states[k][i].r});
  }
  return views;
}

// Every nonempty set of individually feasible (p, s) pairs with at most one
// slot per platform and at most k_max members. Ordered by size, then
// lexicographically by (platform, slot).
inline std::vector<Combo> enumerate_feasible_combos(const StateVector& debris,
                                                    std::span<const SlotView> slots,
                                                    const LaserSystem& laser, int k_max,
                                                    const EarthConstants& earth = {}) {
  if (debris.is_sentinel())
    throw ContractViolation("teg", "combos requested for deorbited debris");
  std::vector<std::vector<SlotAssignment>> by_platform;
  std::vector<int> platform_ids;
  std::vector<SlotAssignment> feasible;
  for (const auto& v : slots)
    if (pla::engagement_feasible(v.position, debris.r, laser, earth))
      feasible.push_back({v.platform, v.slot});
  std::sort(feasible.begin(), feasible.end());
  for (const auto& a : feasible) {
    if (platform_ids.empty() || platform_ids.back() != a.platform) {
      platform_ids.push_back(a.platform);
      by_platform.emplace_back();
    }
    by_platform.back().push_back(a);
  }

  std::vector<Combo> combos;
  Combo current;
  auto recurse = [&](auto&& self, size_t group, int size) -> void {
    if (static_cast<int>(current.size()) == size) {
      combos.push_back(current);
      return;
    }
    for (size_t g = group; g < by_platform.size(); ++g) {
      if (by_platform.size() - g < static_cast<size_t>(size) - current.size()) break;
      for (const auto& a : by_platform[g]) {
        current.push_back(a);
        self(self, g + 1, size);
        current.pop_back();
      }
    }
  };
  const int max_size = std::min<int>(k_max, static_cast<int>(by_platform.size()));
  for (int size = 1; size <= max_size; ++size) recurse(recurse, 0, size);
  return combos;
}

struct ActiveSpacecraft {
  std::string id;
  StateVector state_at_epoch;
  Vec3 semi_axes{1, 1, 1};  // radial, along-track, cross-track (km)

  StateVector state_at(int step, double step_seconds, const EarthConstants& earth = {}) const {
    return astro::propagate_two_body(state_at_epoch, step * step_seconds, earth);
  }
};

// True when `point` lies inside the spacecraft's ellipsoid, expressed in its
// radial / along-track / cross-track frame.
inline bool inside_conjunction_ellipsoid(const StateVector& spacecraft, const Vec3& semi_axes,
                                         const Vec3& point) {
  const Vec3 radial = spacecraft.r.normalized();
  const Vec3 cross = spacecraft.r.cross(spacecraft.v).normalized();
  const Vec3 along = cross.cross(radial);
  const Vec3 d = point - spacecraft.r;
  const double a = d.dot(radial) / semi_axes.x();
  const double b = d.dot(along) / semi_axes.y();
  const double c = d.dot(cross) / semi_axes.z();
  return a * a + b * b + c * c <= 1.0;
}

struct RewardSettings {
  double r_deorbit = 6578.137;  // km
  double alpha = 1e6;
  double step_seconds = 180;
  std::span<const ActiveSpacecraft> active;
  EarthConstants earth;
};

struct TransferReward {
  double value = 0;    // Gamma + gamma
  double gamma = 0;    // periapsis term
  double penalty = 0;  // Gamma, 0 or -alpha
  bool deorbit = false;
};

// Reward of moving debris from `parent` to `post` by an engagement at step t.
// A raised periapsis is never a valid transfer.
inline TransferReward transfer_reward(const StateVector& parent, const StateVector& post,
                                      int step, const RewardSettings& settings) {
  if (parent.is_sentinel() || post.is_sentinel())
    throw ContractViolation("teg", "reward requested for deorbited debris");
  const double before = astro::periapsis_radius(parent, settings.earth);
  const double after = astro::periapsis_radius(post, settings.earth);
  if (after > before)
    throw ContractViolation("teg", "engagement raised the periapsis radius");
  TransferReward out;
  if (after == before) return out;  // same orbit
  if (after <= settings.r_deorbit) {
    out.gamma = 100.0;
    out.deorbit = true;
  } else {
    const double ratio = settings.r_deorbit / after;
    out.gamma = ratio * ratio * ratio;
  }
  if (!settings.active.empty() &&
      astro::angular_momentum(post).norm() > 1e-9 * post.r.norm() * post.v.norm()) {
    const StateVector next =
        astro::propagate_two_body(post, settings.step_seconds, settings.earth);
    for (const auto& sc : settings.active) {
      if (inside_conjunction_ellipsoid(sc.state_at(step + 1, settings.step_seconds, settings.earth),
                                       sc.semi_axes, next.r)) {
        out.penalty = -settings.alpha;
        break;
      }
    }
  }
  out.value = out.penalty + out.gamma;
  return out;
}

struct TegNode {
  int parent = -1;  // index in the previous layer
  DebrisStatus status;
  double reward = 0;  // R on the edge parent -> this node
  bool deorbit = false;
  bool penalized = false;
  Combo combo;  // empty for continuations
  std::vector<int> children;

  bool continuation() const { return combo.empty(); }
};

struct DebrisTeg {
  int debris = 0;
  int start_step = 0;
  std::vector<std::vector<TegNode>> layers;
  bool truncated = false;

  int length() const { return static_cast<int>(layers.size()) - 1; }
  size_t node_count() const {
    size_t n = 0;
    for (const auto& layer : layers) n += layer.size();
    return n;
  }
};

enum class OverflowPolicy { kTruncate, kError };

struct TegSettings {
  int k_max = 3;
  size_t node_cap = 50000;
  OverflowPolicy overflow = OverflowPolicy::kTruncate;
};

// Builds debris `debris`'s graph over `window` starting from `root`.
inline DebrisTeg generate_debris_teg(const DebrisBody& debris, const DebrisStatus& root,
                                     const GridWindow& window, const LaserSystem& laser,
                                     const RewardSettings& reward,
                                     const TegSettings& settings = {}) {
  const EarthConstants& earth = reward.earth;
  const double tof = window.step_seconds;
  DebrisTeg teg;
  teg.debris = debris.id;
  teg.start_step = window.start_step;
  TegNode first;
  first.status = root;
  teg.layers.push_back({first});
  size_t total = 1;

  for (int k = 0; k < window.length; ++k) {
    const int t = window.start_step + k;
    const auto views = window_layer_views(window, k);
    auto& layer = teg.layers[k];
    std::vector<TegNode> next;
    std::vector<size_t> engagement_children;

    for (int i = 0; i < static_cast<int>(layer.size()); ++i) {
      const TegNode& node = layer[i];
      TegNode cont;
      cont.parent = i;
      switch (node.status.status) {
        case NodeStatus::kDeorbited:
          cont.status = DebrisStatus::deorbited();
          next.push_back(cont);
          continue;
        case NodeStatus::kDormant:
          cont.status = t + 1 >= debris.appear_step
                            ? natural_status(debris, t + 1, tof, earth)
                            : DebrisStatus::dormant();
          next.push_back(cont);
          continue;
        case NodeStatus::kActive:
          break;
      }
      const StateVector& q = node.status.state;
      cont.status = DebrisStatus::active(astro::propagate_two_body(q, tof, earth));
      next.push_back(cont);

      const double r_peri = astro::periapsis_radius(q, earth);
      for (const Combo& combo : enumerate_feasible_combos(q, views, laser, settings.k_max, earth)) {
        std::vector<Vec3> dvs;
        for (const auto& a : combo) {
          const auto& pw = window.platforms[a.platform];
          const Vec3& pos = pw.states[k][pw.position_of(k, a.slot)].r;
          dvs.push_back(pla::delta_v_engagement(laser, pos, q, debris.surface_density));
        }
        const StateVector post = pla::apply_cooperative_engagement(q, dvs);
        if (!(astro::periapsis_radius(post, earth) < r_peri)) continue;
        const TransferReward r = transfer_reward(q, post, t, reward);
        TegNode child;
        child.parent = i;
        child.combo = combo;
        child.reward = r.value;
        child.deorbit = r.deorbit;
        child.penalized = r.penalty != 0;
        child.status = r.deorbit
                           ? DebrisStatus::deorbited()
                           : DebrisStatus::active(astro::propagate_two_body(post, tof, earth));
        engagement_children.push_back(next.size());
        next.push_back(std::move(child));
      }
    }

    if (total + next.size() > settings.node_cap) {
      const size_t continuations = next.size() - engagement_children.size();
      if (settings.overflow == OverflowPolicy::kError || total + continuations > settings.node_cap)
        throw TruncationError(t, "debris " + std::to_string(debris.id) +
                                     " graph exceeds the node cap at step " +
                                     std::to_string(t));
      const size_t keep = settings.node_cap - total - continuations;
      std::vector<size_t> order = engagement_children;
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return next[a].reward > next[b].reward;
      });
      std::vector<bool> drop(next.size(), false);
      for (size_t n = keep; n < order.size(); ++n) drop[order[n]] = true;
      std::vector<TegNode> kept;
      for (size_t n = 0; n < next.size(); ++n)
        if (!drop[n]) kept.push_back(std::move(next[n]));
      next = std::move(kept);
      teg.truncated = true;
      spdlog::warn("debris {} graph truncated at step {}: kept {} of {} engagement nodes",
                   debris.id, t, keep, order.size());
    }

    for (int j = 0; j < static_cast<int>(next.size()); ++j)
      layer[next[j].parent].children.push_back(j);
    total += next.size();
    teg.layers.push_back(std::move(next));
  }
  return teg;
}

}  // namespace l2d
