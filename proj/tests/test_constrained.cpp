#include <cmath>

#include <gtest/gtest.h>

#include "glab/constrained.hpp"
#include "glab/payoff.hpp"
#include "glab/verify/instances.hpp"
#include "glab/verify/oracles.hpp"

using namespace glab;

TEST(Penalized, FeasibleZNeedsNoPenalty) {
  auto l = build_binomial(3, 1.0);
  auto xi = payoff::terminal_W(*l);
  auto o = ConstraintSet::interval(-2, 2);
  const double y = g_expectation0(l, gen::discount(0.1), xi);
  for (double n : {1.0, 100.0, 1e4}) {
    auto p = solve_penalized(l, gen::discount(0.1), o, xi, n);
    EXPECT_NEAR(p.sol.Y[l->root()], y, 1e-14);
    for (double a : p.dA) EXPECT_EQ(a, 0.0);
  }
}

TEST(Penalized, OneStepInsideInterval) {
  auto l = build_binomial(1, 1.0);
  auto xi = payoff::terminal_W(*l);
  for (double n : {1.0, 10.0, 1000.0})
    EXPECT_NEAR(solve_penalized(l, gen::zero(), ConstraintSet::interval(-1, 1), xi, n).sol.Y[l->root()], 0.0, 1e-15);
}

TEST(Penalized, TightIntervalIsUnbounded) {
  auto l = build_binomial(1, 1.0);
  auto xi = payoff::terminal_W(*l);
  const double kappa = 0.5;
  auto o = ConstraintSet::interval(-kappa, kappa);
  double prev = -1.0;
  for (double n : {1.0, 10.0, 100.0, 1000.0}) {
    const double y = solve_penalized(l, gen::zero(), o, xi, n).sol.Y[l->root()];
    // Z = 1 on one step, so Y = n (1 - kappa).
    EXPECT_NEAR(y, n * (1.0 - kappa), 1e-12);
    EXPECT_GT(y, prev);
    prev = y;
  }
  const double z[] = {1.0};
  EXPECT_NEAR(violation_detect(z, 1, o).margin, 1.0 - kappa, 1e-15);
}

TEST(Dual, ZeroControlIsPlainExpectation) {
  inst::Rng rng(1);
  auto l = build_trinomial(3, 1.0);
  auto xi = inst::random_leaves(*l, rng);
  auto o = ConstraintSet::interval(-1, 1);
  auto ds = solve_dual(l, gen::abs_z(0.3), o, xi, make_control_grid({{0.0}}, o));
  EXPECT_NEAR(ds.S[l->root()], g_expectation0(l, gen::abs_z(0.3), xi), 1e-13);
}

TEST(Dual, OneStepHandComputation) {
  auto l = build_binomial(1, 1.0);
  auto o = ConstraintSet::interval(-1, 1);
  auto grid = make_control_grid({{-0.5}, {0.0}, {0.5}}, o);
  auto ds = solve_dual(l, gen::zero(), o, payoff::terminal_W(*l), grid);
  EXPECT_NEAR(ds.S[l->root()], 0.0, 1e-15);
  EXPECT_EQ(ds.controls[ds.argmax[0]][0], 0.0);
  // Per control the value is v dt - delta(v) dt = v - |v|.
  for (double v : {-0.5, 0.5}) {
    const double ctl[] = {v, 0, 0};
    EXPECT_NEAR(oracle::dual_fixed_control(*l, gen::zero(), o, payoff::terminal_W(*l), ctl), v - std::abs(v), 1e-15);
  }
}

TEST(Dual, MatchesEnumerationOracle) {
  inst::Rng rng(2);
  for (int t = 0; t < 8; ++t) {
    auto l = t % 2 ? build_trinomial(2, 1.0) : build_binomial(2, 1.0);
    auto o = ConstraintSet::interval(inst::uniform(rng, -1, 0), inst::uniform(rng, 0, 1));
    auto g = t % 3 == 0 ? gen::zero() : (t % 3 == 1 ? gen::discount(0.1) : gen::abs_z(0.3));
    auto xi = inst::random_leaves(*l, rng);
    auto ds = solve_dual(l, g, o, xi, make_control_grid({{-0.5}, {0.0}, {0.5}}, o));
    EXPECT_NEAR(ds.S[l->root()], oracle::dual_enumeration(*l, g, o, xi, {-0.5, 0.0, 0.5}), 1e-10);
  }
}

TEST(Dual, InfeasibleControlsRejected) {
  auto l = build_binomial(3, 1.0);
  auto o = ConstraintSet::interval(-1, 1);
  // |v| sqrt(dt) >= 1 makes the tilt non-positive on some edge.
  auto grid = make_control_grid({{-3.0}, {0.0}, {3.0}}, o);
  auto ds = solve_dual(l, gen::zero(), o, payoff::terminal_W(*l), grid);
  EXPECT_EQ(ds.controls.size(), 1u);
  EXPECT_EQ(ds.rejected.size(), 2u);
  EXPECT_FALSE(ds.warnings.empty());
  try {
    solve_dual(l, gen::zero(), o, payoff::terminal_W(*l), make_control_grid({{3.0}}, o));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_feasible_control);
  }
}

TEST(Violation, ProjectedIsFeasible) {
  inst::Rng rng(3);
  auto o = ConstraintSet::ball({0.2, -0.1}, 0.7);
  std::vector<double> z;
  for (int i = 0; i < 30; ++i) {
    const double v[] = {inst::uniform(rng, -3, 3), inst::uniform(rng, -3, 3)};
    auto p = project(o, v);
    z.insert(z.end(), p.begin(), p.end());
  }
  EXPECT_LE(violation_detect(z, 2, o, 64).margin, 1e-12);
}

TEST(Violation, IntervalMarginAndDirection) {
  const double z[] = {0.0, 3.0, -0.5};
  auto r = violation_detect(z, 1, ConstraintSet::interval(-1, 1));
  EXPECT_DOUBLE_EQ(r.margin, 2.0);
  EXPECT_EQ(r.node, 1u);
  EXPECT_EQ(r.direction[0], 1.0);
}

TEST(Duality, FeasibleScenarioHasNoGap) {
  inst::Rng rng(4);
  auto l = build_binomial(3, 1.0);
  auto xi = payoff::terminal_W(*l);
  auto o = ConstraintSet::interval(-2, 2);
  auto r = duality_gap(l, gen::discount(0.1), o, xi, {1, 10, 100}, uniform_controls(-0.5, 0.5, 5, o));
  EXPECT_LE(std::abs(r.gap), 1e-6);
  EXPECT_TRUE(r.weak_duality);
  EXPECT_TRUE(r.primal_monotone);
}

TEST(Duality, OneStepGapIsZero) {
  auto l = build_binomial(1, 1.0);
  auto o = ConstraintSet::interval(-1, 1);
  auto r = duality_gap(l, gen::zero(), o, payoff::terminal_W(*l), {1, 10, 100, 1000},
                       make_control_grid({{-0.5}, {0.0}, {0.5}}, o));
  EXPECT_LE(std::abs(r.gap), 1e-9);
  EXPECT_TRUE(r.weak_duality);
}

TEST(Duality, WeakDualityOnRandomScenarios) {
  inst::Rng rng(5);
  for (int t = 0; t < 15; ++t) {
    auto l = inst::pick(rng, 0, 1) ? build_binomial(inst::pick(rng, 1, 4), 1.0) : build_trinomial(inst::pick(rng, 1, 3), 1.0);
    auto xi = inst::random_leaves(*l, rng);
    auto g = gen::discount(inst::uniform(rng, 0, 0.3));
    // Wide enough that the unconstrained Z already lies inside.
    auto plain = solve_bsde(l, g, xi);
    double lo = 0, hi = 0;
    for (double z : plain.Z) lo = std::min(lo, z), hi = std::max(hi, z);
    auto o = ConstraintSet::interval(lo - 0.1, hi + 0.1);
    auto r = duality_gap(l, g, o, xi, {1, 10, 100}, uniform_controls(-0.5, 0.5, 5, o));
    EXPECT_TRUE(r.weak_duality) << "trial " << t << " slack " << r.weak_duality_slack;
    EXPECT_LE(std::abs(r.gap), 1e-9);
    for (double v : r.violation) EXPECT_LE(v, 1e-12);
  }
}

TEST(Controls, UniformGridAndJson) {
  auto o = ConstraintSet::interval(-1, 1);
  auto g = uniform_controls(-2, 2, 21, o);
  EXPECT_EQ(g.controls.size(), 21u);
  EXPECT_DOUBLE_EQ(g.controls.front()[0], -2.0);
  EXPECT_DOUBLE_EQ(g.controls.back()[0], 2.0);
  auto j = controls_from_json({{"grid", "list"}, {"values", {0.5, -0.5, 0.5}}}, o);
  ASSERT_EQ(j.controls.size(), 2u);
  EXPECT_LT(j.controls[0][0], j.controls[1][0]);
  EXPECT_THROW(controls_from_json({{"grid", "spiral"}}, o), Error);
}
