#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "glab/process.hpp"

using namespace glab;

namespace {

AdaptedProcess depth_process(const LatticePtr& l) {
  AdaptedProcess p(l);
  for (std::size_t i = 0; i < l->node_count(); ++i) p.values()[i] = l->node_at(i).depth;
  return p;
}

}  // namespace

TEST(StoppingTimes, NeverHitStopsAtTerminal) {
  auto l = build_binomial(3, 1.0);
  auto t = first_hitting_time(AdaptedProcess(l, 0.0), 1.0);
  for (std::size_t p = 0; p < l->leaf_count(); ++p) EXPECT_EQ(t.slot_on_path(l->leaf(p)), slot_of(3, false));
}

TEST(StoppingTimes, ImmediateHitStopsAtRoot) {
  auto l = build_binomial(3, 1.0);
  auto t = first_hitting_time(AdaptedProcess(l, 5.0), 1.0);
  EXPECT_TRUE(t.stops_at(l->root()));
  EXPECT_EQ(t.stopped_nodes().size(), 1u);
}

TEST(StoppingTimes, UpMoveCounter) {
  // Child 0 is the up-move on the binomial lattice.
  auto l = build_binomial(3, 1.0);
  AdaptedProcess ups(l);
  for (std::size_t i = 1; i < l->node_count(); ++i) {
    const NodeId n = l->node_at(i);
    ups.values()[i] = ups.at(l->parent(n).index) + (l->child_slot(n) == 0 ? 1 : 0);
  }
  auto t = first_hitting_time(ups, 2.0);
  // Hand enumeration: the hit happens at depth 2 only on the up-up prefix.
  const NodeId uu = l->child(l->child(l->root(), 0), 0);
  EXPECT_TRUE(t.stops_at(uu));
  EXPECT_EQ(t.slot_at(uu), slot_of(2, false));
  for (std::size_t p = 0; p < l->leaf_count(); ++p) {
    const NodeId leaf = l->leaf(p);
    int count = 0;
    int hit = -1;
    auto path = l->path_to(leaf);
    for (std::size_t k = 1; k < path.size(); ++k) {
      count += l->child_slot(path[k]) == 0;
      if (count >= 2 && hit < 0) hit = static_cast<int>(k);
    }
    EXPECT_EQ(t.slot_on_path(leaf), slot_of(hit < 0 ? 3 : hit, false)) << "leaf " << p;
  }
}

TEST(StoppingTimes, EarliestLatestOrder) {
  auto l = build_trinomial(3, 1.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    auto a = random_stopping_time(l, rng), b = random_stopping_time(l, rng);
    EXPECT_TRUE(precedes(earliest(a, b), a));
    EXPECT_TRUE(precedes(b, latest(a, b)));
    EXPECT_TRUE(precedes(earliest(a, b), latest(a, b)));
  }
}

TEST(StoppingTimes, DeterministicSlotBounds) {
  auto l = build_binomial(2, 1.0);
  EXPECT_THROW(StoppingTime::deterministic(l, 5), Error);
  EXPECT_THROW(StoppingTime::deterministic(l, -1), Error);
  EXPECT_TRUE(StoppingTime::deterministic(l, 3).is_deterministic());
}

TEST(Evaluate, ConstantProcess) {
  auto l = build_trinomial(3, 1.0);
  std::mt19937_64 rng(5);
  auto tau = random_stopping_time(l, rng);
  auto v = evaluate_at(LadlagProcess::from_adapted(AdaptedProcess(l, 2.5)), tau);
  for (const NodeId& n : tau.stopped_nodes()) EXPECT_DOUBLE_EQ(v[n], 2.5);
}

TEST(Evaluate, DepthAtTerminal) {
  auto l = build_binomial(4, 1.0);
  auto v = evaluate_at(depth_process(l), StoppingTime::terminal(l));
  for (std::size_t p = 0; p < l->leaf_count(); ++p) EXPECT_DOUBLE_EQ(v[l->leaf(p)], 4.0);
}

TEST(Evaluate, PreJumpValueAtGridTime) {
  auto l = build_binomial(2, 1.0);
  LadlagProcess x(l);
  for (std::size_t p = 0; p < l->width(1); ++p) {
    x.value(l->node(1, p)) = 3.0;
    x.right_value(l->node(1, p)) = 2.0;
  }
  auto at = evaluate_at(x, StoppingTime::deterministic(l, slot_of(1, false)));
  auto after = evaluate_at(x, StoppingTime::deterministic(l, slot_of(1, true)));
  EXPECT_DOUBLE_EQ(at[l->node(1, 0)], 3.0);
  EXPECT_DOUBLE_EQ(after[l->node(1, 0)], 2.0);
}

TEST(Evaluate, LatticeMismatch) {
  auto a = build_binomial(2, 1.0), b = build_binomial(2, 1.0);
  EXPECT_THROW(evaluate_at(AdaptedProcess(a, 0.0), StoppingTime::terminal(b)), Error);
}

TEST(Aggregation, RoundTripsRandomTimes) {
  auto l = build_trinomial(3, 1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  LadlagProcess x(l);
  for (std::size_t i = 0; i < l->node_count(); ++i) {
    x.value(l->node_at(i)) = u(rng);
    if (i < l->interior_count()) x.right_value(l->node_at(i)) = u(rng);
  }
  TSystem s{l, {}};
  for (const auto& t : doubled_grid_times(l)) s.members.push_back(evaluate_at(x, t));
  for (int i = 0; i < 20; ++i) s.members.push_back(evaluate_at(x, random_stopping_time(l, rng)));
  auto y = aggregate_t_system(s);
  for (std::size_t i = 0; i < l->node_count(); ++i) {
    EXPECT_EQ(y.value(l->node_at(i)), x.value(l->node_at(i)));
    if (i < l->interior_count()) EXPECT_EQ(y.right_value(l->node_at(i)), x.right_value(l->node_at(i)));
  }
}

TEST(Aggregation, DisagreementNamesNode) {
  auto l = build_binomial(2, 1.0);
  auto x = LadlagProcess::from_adapted(depth_process(l));
  TSystem s{l, {}};
  for (const auto& t : doubled_grid_times(l)) s.members.push_back(evaluate_at(x, t));
  auto bad = evaluate_at(x, StoppingTime::deterministic(l, slot_of(1, false)));
  const NodeId n = l->node(1, 1);
  bad.values[n.index] += 1.0;
  s.members.push_back(bad);
  try {
    aggregate_t_system(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::aggregation_failure);
    ASSERT_TRUE(e.witness().has_value());
    EXPECT_EQ(*e.witness(), n.index);
  }
}

TEST(Aggregation, DeterministicOnly) {
  auto l = build_binomial(3, 1.0);
  auto x = LadlagProcess::from_adapted(depth_process(l));
  TSystem s{l, {}};
  for (const auto& t : doubled_grid_times(l)) s.members.push_back(evaluate_at(x, t));
  auto y = aggregate_t_system(s);
  for (std::size_t i = 0; i < l->node_count(); ++i) EXPECT_EQ(y.value(l->node_at(i)), l->node_at(i).depth);
}

TEST(Aggregation, MissingSlotIsUnderDetermined) {
  auto l = build_binomial(2, 1.0);
  auto x = LadlagProcess::from_adapted(depth_process(l));
  TSystem s{l, {evaluate_at(x, StoppingTime::terminal(l))}};
  try {
    aggregate_t_system(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::under_determined);
  }
}

TEST(Ladlag, JsonRoundTrip) {
  auto l = build_trinomial(2, 1.0);
  LadlagProcess x(l);
  for (std::size_t i = 0; i < l->node_count(); ++i) {
    x.value(l->node_at(i)) = 0.1 * i;
    if (i < l->interior_count()) x.right_value(l->node_at(i)) = -0.3 * i;
  }
  auto y = LadlagProcess::from_json(l, x.to_json());
  for (std::size_t i = 0; i < l->node_count(); ++i) {
    EXPECT_EQ(y.value(l->node_at(i)), x.value(l->node_at(i)));
    if (i < l->interior_count()) EXPECT_EQ(y.right_value(l->node_at(i)), x.right_value(l->node_at(i)));
  }
}
