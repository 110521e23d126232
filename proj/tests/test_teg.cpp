#include <gtest/gtest.h>

#include "gen.hpp"
#include "l2d/teg.hpp"
#include "micro.hpp"
#include "oracles.hpp"

using namespace l2d;

namespace {

StateVector circ(double a, double u_deg) {
  const auto s = oracle::circular(a, 50, 0, u_deg);
  return {s.r, s.v};
}

// Platform window with fixed slot positions at every layer.
GridWindow fixed_window(const std::vector<std::vector<Vec3>>& per_platform, int length) {
  GridWindow w;
  w.length = length;
  w.step_seconds = 180;
  for (const auto& positions : per_platform) {
    PlatformWindow pw;
    for (int k = 0; k <= length; ++k) {
      std::vector<int> ids;
      std::vector<StateVector> st;
      for (size_t s = 0; s < positions.size(); ++s) {
        ids.push_back(static_cast<int>(s));
        st.push_back({positions[s], Vec3(0, 7, 0)});
      }
      pw.slots.push_back(k == 0 ? std::vector<int>{0} : ids);
      pw.states.push_back(k == 0 ? std::vector<StateVector>{st[0]} : st);
    }
    for (int k = 0; k < length; ++k) {
      std::vector<SlotEdge> edges;
      for (size_t i = 0; i < pw.slots[k].size(); ++i)
        for (size_t j = 0; j < pw.slots[k + 1].size(); ++j)
          edges.push_back({static_cast<int>(i), static_cast<int>(j),
                           pw.slots[k][i] == pw.slots[k + 1][j] ? 0.0 : 0.5});
      pw.edges.push_back(edges);
    }
    w.platforms.push_back(pw);
    w.budgets.push_back(1.0);
  }
  return w;
}

}  // namespace

TEST(Combos, NoneInRange) {
  const std::vector<SlotView> views{{0, 0, Vec3(0, 0, 9000)}};
  EXPECT_TRUE(enumerate_feasible_combos(circ(7000, 0), views, LaserSystem{}, 3).empty());
}

TEST(Combos, TwoPlatformsGiveThree) {
  const StateVector d = circ(7000, 0);
  const Vec3 off(0, 0, 250);
  const std::vector<SlotView> views{{0, 4, d.r + off}, {1, 2, d.r - off}};
  const auto combos = enumerate_feasible_combos(d, views, LaserSystem{}, 3);
  ASSERT_EQ(combos.size(), 3u);
  EXPECT_EQ(combos[0], (Combo{{0, 4}}));
  EXPECT_EQ(combos[1], (Combo{{1, 2}}));
  EXPECT_EQ(combos[2], (Combo{{0, 4}, {1, 2}}));
  EXPECT_EQ(enumerate_feasible_combos(d, views, LaserSystem{}, 1).size(), 2u);
}

TEST(Combos, SamePlatformNeverTwice) {
  const StateVector d = circ(7000, 0);
  const std::vector<SlotView> views{
      {0, 0, d.r + Vec3(0, 0, 250)}, {0, 1, d.r + Vec3(0, 250, 0)}, {1, 0, d.r - Vec3(0, 0, 250)}};
  const auto combos = enumerate_feasible_combos(d, views, LaserSystem{}, 3);
  EXPECT_EQ(combos, oracle::powerset_combos({{0, 0}, {0, 1}, {1, 0}}, 3));
  EXPECT_EQ(combos.size(), 5u);
}

TEST(Combos, MatchPowersetOracle) {
  gen::Source src(41);
  const LaserSystem l;
  for (int n = 0; n < 300; ++n) {
    const StateVector d = circ(src.real(6900, 7300), src.real(0, 360));
    std::vector<SlotView> views;
    const int P = src.integer(1, 4);
    for (int p = 0; p < P; ++p)
      for (int s = 0; s < src.integer(1, 3); ++s) {
        const Vec3 dir = Vec3(src.real(-1, 1), src.real(-1, 1), src.real(-1, 1)).normalized();
        views.push_back({p, s, d.r + src.real(100, 400) * dir});
      }
    std::vector<SlotAssignment> pairs;
    for (const auto& v : views)
      if (oracle::feasible(v.position, d.r, l)) pairs.push_back({v.platform, v.slot});
    const int k_max = src.integer(1, 3);
    EXPECT_EQ(enumerate_feasible_combos(d, views, l, k_max), oracle::powerset_combos(pairs, k_max));
  }
}

TEST(Combos, RejectSentinel) {
  EXPECT_THROW(enumerate_feasible_combos(StateVector::deorbited(), {}, LaserSystem{}, 3),
               ContractViolation);
}

TEST(Reward, DeorbitSameAndPartial) {
  RewardSettings rs;
  const StateVector d = circ(7000, 0);
  StateVector big = d;
  big.v -= 1.0 * d.v.normalized();
  EXPECT_EQ(transfer_reward(d, big, 0, rs).value, 100);
  EXPECT_TRUE(transfer_reward(d, big, 0, rs).deorbit);
  EXPECT_EQ(transfer_reward(d, d, 0, rs).value, 0);

  // Periapsis near 6800 km: pick the retrograde burn by bisection.
  double lo = 0, hi = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    StateVector p = d;
    p.v -= mid * d.v.normalized();
    (oracle::periapsis(p.r, p.v) > 6800 ? lo : hi) = mid;
  }
  StateVector post = d;
  post.v -= lo * d.v.normalized();
  const double rp = oracle::periapsis(post.r, post.v);
  EXPECT_NEAR(rp, 6800, 1e-6);
  EXPECT_NEAR(transfer_reward(d, post, 0, rs).value, std::pow(6578.137 / rp, 3), 1e-9);

  StateVector up = d;
  up.v += 0.1 * d.v.normalized();
  EXPECT_THROW(transfer_reward(d, up, 0, rs), ContractViolation);
}

TEST(Reward, PenaltyAgreesWithEllipsoidOracle) {
  gen::Source src(42);
  int inside = 0, outside = 0;
  for (int n = 0; n < 400; ++n) {
    const StateVector d = circ(src.real(6900, 7200), src.real(0, 360));
    StateVector post = d;
    post.v += Vec3(src.real(-0.3, 0.3), src.real(-0.3, 0.3), src.real(-0.3, 0.3)) - 0.2 * d.v.normalized();
    if (!(oracle::periapsis(post.r, post.v) < oracle::periapsis(d.r, d.v))) continue;
    const int t = src.integer(0, 5);
    // Spacecraft that reaches the debris' coasting position at step t + 1.
    const auto back = oracle::kepler(d.r, d.v, -t * 180.0);
    const ActiveSpacecraft sc{"a", {back.r, back.v},
                              Vec3(src.real(10, 300), src.real(10, 300), src.real(10, 300))};
    const std::vector<ActiveSpacecraft> active{sc};
    RewardSettings rs;
    rs.alpha = 1e6;
    rs.active = active;
    const double got = transfer_reward(d, post, t, rs).value;
    const std::vector<oracle::Spacecraft> osc{{{back.r, back.v}, sc.semi_axes}};
    const double want = oracle::reward({d.r, d.v}, {post.r, post.v}, t, 6578.137, 1e6, 180, osc).value;
    EXPECT_NEAR(got, want, 1e-9 * std::max(1.0, std::abs(want))) << n;
    (got < -1 ? inside : outside)++;
  }
  EXPECT_GT(inside, 10);
  EXPECT_GT(outside, 10);
}

TEST(Ellipsoid, MatchesOracle) {
  gen::Source src(43);
  for (int n = 0; n < 2000; ++n) {
    const StateVector c = circ(src.real(6800, 7500), src.real(0, 360));
    const Vec3 axes(src.real(1, 50), src.real(1, 50), src.real(1, 50));
    const Vec3 p = c.r + Vec3(src.real(-60, 60), src.real(-60, 60), src.real(-60, 60));
    EXPECT_EQ(inside_conjunction_ellipsoid(c, axes, p), oracle::in_ellipsoid(c.r, c.v, axes, p));
  }
}

TEST(Teg, NoCombosIsAChain) {
  const StateVector d = circ(7000, 0);
  const GridWindow w = fixed_window({{Vec3(0, 0, 9000)}}, 4);
  DebrisBody body;
  body.state_at_appearance = d;
  const DebrisTeg teg = generate_debris_teg(body, DebrisStatus::active(d), w, LaserSystem{}, {});
  ASSERT_EQ(teg.layers.size(), 5u);
  for (const auto& layer : teg.layers) {
    ASSERT_EQ(layer.size(), 1u);
    EXPECT_EQ(layer[0].reward, 0);
  }
}

TEST(Teg, SingleDeorbitAtFirstStep) {
  const StateVector d = circ(7000, 0);
  // In range only at layer 0 (the platform's start slot).
  GridWindow w = fixed_window({{d.r + Vec3(0, 0, 250)}}, 3);
  for (int k = 1; k <= 3; ++k) w.platforms[0].states[k][0].r = Vec3(0, 0, 9000);
  DebrisBody body;
  body.state_at_appearance = d;
  const DebrisTeg teg = generate_debris_teg(body, DebrisStatus::active(d), w, LaserSystem{}, {});
  ASSERT_EQ(teg.layers[1].size(), 2u);
  EXPECT_TRUE(teg.layers[1][0].continuation());
  EXPECT_TRUE(teg.layers[1][1].deorbit);
  EXPECT_EQ(teg.layers[1][1].reward, 100);
  // The deorbit branch only carries sentinels.
  int idx = 1;
  for (int k = 2; k <= 3; ++k) {
    ASSERT_EQ(teg.layers[k - 1][idx].children.size(), 1u);
    idx = teg.layers[k - 1][idx].children[0];
    EXPECT_EQ(teg.layers[k][idx].status.status, NodeStatus::kDeorbited);
    EXPECT_EQ(teg.layers[k][idx].reward, 0);
  }
}

TEST(Teg, TwoPlatformsThreeEngagementChildren) {
  const StateVector d = circ(7000, 0);
  const Vec3 ahead = d.v.normalized();
  const Vec3 up = d.r.normalized();
  const GridWindow w =
      fixed_window({{d.r + 250 * ahead}, {d.r + 200 * ahead + 120 * up}}, 1);
  DebrisBody body;
  body.surface_density = 50;  // partial nudges, no deorbit
  body.state_at_appearance = d;
  const LaserSystem l;
  const DebrisTeg teg = generate_debris_teg(body, DebrisStatus::active(d), w, l, {});
  ASSERT_EQ(teg.layers[1].size(), 4u);
  EXPECT_TRUE(teg.layers[1][0].continuation());
  EXPECT_EQ(teg.layers[1][3].combo, (Combo{{0, 0}, {1, 0}}));
  const auto ref = oracle::expand_graph({{d.r, d.v}, 0, 50}, {-1, oracle::Node::kActive, {d.r, d.v}, 0, {}},
                                        w, l, 3, 6578.137, 1e6, {});
  ASSERT_EQ(ref[1].size(), 4u);
  for (size_t j = 1; j < 4; ++j) {
    EXPECT_EQ(teg.layers[1][j].combo, ref[1][j].combo);
    EXPECT_NEAR(teg.layers[1][j].reward, ref[1][j].reward, 1e-9);
    EXPECT_GT(teg.layers[1][j].reward, 0);
    EXPECT_LT(teg.layers[1][j].reward, 1);
    EXPECT_LT((teg.layers[1][j].status.state.r - ref[1][j].s.r).norm(), 1e-6);
  }
}

namespace {

void expect_same_layers(const DebrisTeg& teg, const std::vector<std::vector<oracle::Node>>& ref,
                        std::uint64_t seed, int d) {
  ASSERT_EQ(teg.layers.size(), ref.size()) << seed;
  for (size_t k = 0; k < ref.size(); ++k) {
    ASSERT_EQ(teg.layers[k].size(), ref[k].size()) << "seed " << seed << " debris " << d << " layer " << k;
    for (size_t j = 0; j < ref[k].size(); ++j) {
      const TegNode& a = teg.layers[k][j];
      const oracle::Node& b = ref[k][j];
      EXPECT_EQ(a.parent, b.parent);
      EXPECT_EQ(a.combo, b.combo);
      EXPECT_NEAR(a.reward, b.reward, 1e-9 * std::max(1.0, std::abs(b.reward)));
      const int kind = a.status.status == NodeStatus::kActive      ? oracle::Node::kActive
                       : a.status.status == NodeStatus::kDeorbited ? oracle::Node::kGone
                                                                   : oracle::Node::kWaiting;
      EXPECT_EQ(kind, b.kind);
      if (b.kind == oracle::Node::kActive) {
        EXPECT_LT((a.status.state.r - b.s.r).norm(), 1e-6)
            << "seed " << seed << " d " << d << " k " << k << " j " << j << " lib " << a.status.state.r.transpose()
            << " ref " << b.s.r.transpose() << " parent kind " << ref[k - 1][b.parent].kind;
        EXPECT_LT((a.status.state.v - b.s.v).norm(), 1e-9);
      }
    }
  }
}

}  // namespace

TEST(Teg, MatchesExpansionOracle) {
  int engagements = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const micro::Instance in = micro::make(seed);
    std::vector<oracle::Spacecraft> osc;
    for (const auto& a : in.active) osc.push_back({{a.state_at_epoch.r, a.state_at_epoch.v}, a.semi_axes});
    for (size_t d = 0; d < in.bodies.size(); ++d) {
      const auto& b = in.bodies[d];
      oracle::Node root;
      if (in.roots[d].status == NodeStatus::kDormant) root.kind = oracle::Node::kWaiting;
      else root.s = {in.roots[d].state.r, in.roots[d].state.v};
      const auto ref = oracle::expand_graph({{b.state_at_appearance.r, b.state_at_appearance.v},
                                             b.appear_step, b.surface_density},
                                            root, in.window, in.laser, in.k_max, in.r_deorbit,
                                            in.alpha, osc);
      expect_same_layers(in.tegs[d], ref, seed, static_cast<int>(d));
      for (const auto& layer : in.tegs[d].layers)
        for (const auto& node : layer) engagements += !node.continuation();
    }
  }
  EXPECT_GT(engagements, 100);
}

TEST(Teg, StructuralInvariants) {
  for (std::uint64_t seed = 200; seed < 400; ++seed) {
    const micro::Instance in = micro::make(seed);
    for (const auto& teg : in.tegs) {
      for (size_t k = 0; k + 1 < teg.layers.size(); ++k) {
        const auto& layer = teg.layers[k];
        const auto& next = teg.layers[k + 1];
        size_t child_total = 0;
        for (size_t i = 0; i < layer.size(); ++i) {
          const auto& node = layer[i];
          ASSERT_FALSE(node.children.empty());
          const auto& first = next[node.children[0]];
          EXPECT_TRUE(first.continuation());
          EXPECT_EQ(first.reward, 0);
          child_total += node.children.size();
          for (int j : node.children) {
            const auto& c = next[j];
            EXPECT_EQ(c.parent, static_cast<int>(i));
            if (node.status.status != NodeStatus::kActive) {
              EXPECT_EQ(node.children.size(), 1u);
              EXPECT_EQ(c.reward, 0);
            }
            if (node.status.status == NodeStatus::kDeorbited)
              EXPECT_EQ(c.status.status, NodeStatus::kDeorbited);
            if (!c.continuation()) {
              const double gamma = c.penalized ? c.reward + in.alpha : c.reward;
              EXPECT_TRUE((gamma > 0 && gamma < 1) || gamma == 100) << gamma;
              EXPECT_LE(static_cast<int>(c.combo.size()), in.k_max);
            }
          }
        }
        EXPECT_EQ(child_total, next.size());
      }
    }
  }
}

TEST(Teg, PeriapsisNonIncreasingAtEngagements) {
  for (std::uint64_t seed = 400; seed < 500; ++seed) {
    const micro::Instance in = micro::make(seed);
    for (const auto& teg : in.tegs) {
      for (size_t k = 1; k < teg.layers.size(); ++k) {
        for (const auto& node : teg.layers[k]) {
          const auto& parent = teg.layers[k - 1][node.parent];
          if (node.continuation() || node.deorbit) continue;
          EXPECT_LT(astro::periapsis_radius(node.status.state),
                    astro::periapsis_radius(parent.status.state));
        }
      }
    }
  }
}

TEST(Teg, RebuildFromIntermediateLayer) {
  for (std::uint64_t seed = 500; seed < 540; ++seed) {
    const micro::Instance in = micro::make(seed);
    if (in.window.length < 2) continue;
    // Sub-window starting at layer 1.
    GridWindow sub = in.window;
    sub.start_step += 1;
    sub.length -= 1;
    for (auto& pw : sub.platforms) {
      pw.slots.erase(pw.slots.begin());
      pw.states.erase(pw.states.begin());
      pw.edges.erase(pw.edges.begin());
    }
    for (size_t d = 0; d < in.tegs.size(); ++d) {
      const auto& full = in.tegs[d];
      for (size_t j = 0; j < full.layers[1].size(); ++j) {
        const DebrisTeg part = generate_debris_teg(in.bodies[d], full.layers[1][j].status, sub,
                                                   in.laser, in.reward(), in.teg_settings());
        // Walk the subtree under node j breadth-first and compare.
        std::vector<int> frontier{static_cast<int>(j)};
        for (size_t k = 1; k < full.layers.size(); ++k) {
          const auto& plevel = part.layers[k - 1];
          ASSERT_EQ(plevel.size(), frontier.size());
          std::vector<int> next;
          for (size_t q = 0; q < frontier.size(); ++q) {
            const auto& a = full.layers[k][frontier[q]];
            const auto& b = plevel[q];
            EXPECT_EQ(a.status, b.status);
            if (q > 0 || k > 1) {
              EXPECT_EQ(a.reward, b.reward);
              EXPECT_EQ(a.combo, b.combo);
            }
            for (int c : a.children) next.push_back(c);
          }
          frontier = next;
        }
      }
    }
  }
}

TEST(Teg, NodeCapPolicies) {
  const micro::Instance in = micro::make(7);
  size_t biggest = 0;
  int which = 0;
  for (size_t d = 0; d < in.tegs.size(); ++d)
    if (in.tegs[d].node_count() > biggest) biggest = in.tegs[d].node_count(), which = static_cast<int>(d);
  TegSettings s = in.teg_settings();
  s.node_cap = in.window.length + 1;  // room for continuations only
  s.overflow = OverflowPolicy::kTruncate;
  const DebrisTeg cut = generate_debris_teg(in.bodies[which], in.roots[which], in.window, in.laser,
                                            in.reward(), s);
  EXPECT_LE(cut.node_count(), s.node_cap);
  if (biggest > s.node_cap) {
    EXPECT_TRUE(cut.truncated);
    s.overflow = OverflowPolicy::kError;
    EXPECT_THROW(generate_debris_teg(in.bodies[which], in.roots[which], in.window, in.laser,
                                     in.reward(), s),
                 TruncationError);
  }
}

TEST(Teg, DormantDebrisAppears) {
  const StateVector d = circ(7000, 0);
  const GridWindow w = fixed_window({{Vec3(0, 0, 9000)}}, 3);
  DebrisBody body;
  body.appear_step = 2;
  body.state_at_appearance = d;
  const DebrisTeg teg = generate_debris_teg(body, DebrisStatus::dormant(), w, LaserSystem{}, {});
  EXPECT_EQ(teg.layers[1][0].status.status, NodeStatus::kDormant);
  EXPECT_EQ(teg.layers[2][0].status.status, NodeStatus::kActive);
  EXPECT_EQ(teg.layers[2][0].status.state, d);
}
