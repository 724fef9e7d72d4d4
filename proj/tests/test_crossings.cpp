#include <gtest/gtest.h>

#include "glab/crossings.hpp"
#include "glab/verify/instances.hpp"
#include "glab/verify/oracles.hpp"

using namespace glab;

namespace {

AdaptedProcess by_depth(const LatticePtr& l, const std::vector<double>& v) {
  AdaptedProcess x(l);
  for (std::size_t i = 0; i < l->node_count(); ++i) x.values()[i] = v[l->node_at(i).depth];
  return x;
}

int count_all(const AdaptedProcess& x, double a, double b) {
  auto c = count_downcrossings(x, grid_times(x.lattice()), a, b);
  for (int v : c) EXPECT_EQ(v, c.front());
  return c.front();
}

}  // namespace

TEST(DownCrossings, MonotonePathHasNone) {
  auto l = build_binomial(4, 1.0);
  EXPECT_EQ(count_all(by_depth(l, {-2, -1, 0, 1, 2}), 0.0, 1.0), 0);
}

TEST(DownCrossings, OneAndTwo) {
  const double a = 0.0, b = 1.0;
  EXPECT_EQ(count_all(by_depth(build_binomial(1, 1.0), {b + 1, a - 1}), a, b), 1);
  EXPECT_EQ(count_all(by_depth(build_binomial(3, 1.0), {b + 1, a - 1, b + 1, a - 1}), a, b), 2);
}

TEST(DownCrossings, ThresholdsAreClosed) {
  EXPECT_EQ(count_all(by_depth(build_binomial(1, 1.0), {1.0, 0.0}), 0.0, 1.0), 1);
}

TEST(DownCrossings, Errors) {
  auto l = build_binomial(2, 1.0);
  AdaptedProcess x(l, 0.0);
  EXPECT_THROW(count_downcrossings(x, grid_times(l), 1.0, 1.0), Error);
  // Two stopping times that cross on different paths.
  std::vector<std::int8_t> f1(l->node_count(), StoppingTime::kContinue), f2 = f1;
  f1[l->node(1, 0).index] = StoppingTime::kStopValue;
  f1[l->node(2, 2).index] = StoppingTime::kStopValue;
  f1[l->node(2, 3).index] = StoppingTime::kStopValue;
  f2[l->node(1, 1).index] = StoppingTime::kStopValue;
  f2[l->node(2, 0).index] = StoppingTime::kStopValue;
  f2[l->node(2, 1).index] = StoppingTime::kStopValue;
  std::vector<StoppingTime> j{StoppingTime::from_flags(l, f1), StoppingTime::from_flags(l, f2)};
  try {
    count_downcrossings(x, j, 0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_family);
  }
}

TEST(DownCrossings, FamilyIsSorted) {
  auto l = build_binomial(2, 1.0);
  auto t = grid_times(l);
  std::vector<StoppingTime> rev(t.rbegin(), t.rend());
  auto x = by_depth(l, {2, -1, 2});
  EXPECT_EQ(count_downcrossings(x, rev, 0.0, 1.0), count_downcrossings(x, t, 0.0, 1.0));
}

TEST(BoundCheck, ConstantAboveB) {
  auto l = build_trinomial(3, 1.0);
  auto r = downcrossing_bound_check(AdaptedProcess(l, 2.0), gen::zero(), 0.0, 1.0);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_GE(r.rhs, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(BoundCheck, ClassicalCaseMatchesDoob) {
  inst::Rng rng(1);
  inst::ForwardOptions o;
  o.z_scale = 2.5;
  for (int t = 0; t < 20; ++t) {
    auto l = inst::pick(rng, 0, 1) ? build_binomial(inst::pick(rng, 2, 6), 1.0) : build_trinomial(inst::pick(rng, 2, 4), 1.0);
    auto f = inst::forward_construct(l, gen::zero(), rng, o);
    auto x = f.X.value_process();
    auto r = downcrossing_bound_check(x, gen::zero(), 0.0, 1.0);
    auto d = oracle::classical_doob(x, 0.0, 1.0);
    EXPECT_NEAR(r.lhs, d.expected_crossings, 1e-13);
    EXPECT_GE(r.margin, -1e-9);
    EXPECT_LE(d.expected_crossings, d.bound + 1e-12);
  }
}

TEST(BoundCheck, SeededAbsZSupermartingales) {
  inst::Rng rng(2);
  inst::ForwardOptions o;
  o.z_scale = 2.5;
  auto l = build_binomial(4, 1.0);
  auto g = gen::abs_z(0.5);
  for (int t = 0; t < 200; ++t) {
    auto f = inst::forward_construct(l, g, rng, o);
    auto r = downcrossing_bound_check(f.X.value_process(), g, 0.0, 1.0);
    EXPECT_GE(r.margin, -1e-9) << "trial " << t;
  }
}

TEST(BoundCheck, ShiftedReductionAgrees) {
  inst::Rng rng(3);
  auto l = build_trinomial(3, 1.0);
  auto g = gen::linear(0.5, {0.5});
  for (int t = 0; t < 10; ++t) {
    auto f = inst::forward_construct(l, g, rng);
    auto x = f.X.value_process();
    auto j = grid_times(l);
    auto a = downcrossing_bound_check(x, g, -1.0, 2.0, j);
    auto b = downcrossing_bound_check_shifted(x, g, -1.0, 2.0, j);
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_NEAR(a.lhs, b.lhs, 1e-10);
    EXPECT_NEAR(a.rhs, b.rhs, 1e-10);
  }
}
