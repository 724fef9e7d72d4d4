#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "glab/decomp.hpp"
#include "glab/payoff.hpp"
#include "glab/verify/instances.hpp"
#include "glab/verify/oracles.hpp"

using namespace glab;

namespace {

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Jump of size `s` at every depth-k node of a constant-zero process.
LadlagProcess jump_at(const LatticePtr& l, int k, double s) {
  auto x = LadlagProcess::from_adapted(AdaptedProcess(l, 0.0));
  for (std::size_t i = 0; i < l->node_count(); ++i) {
    const NodeId n = l->node_at(i);
    if (n.depth > k) x.value(n) = -s;
    if (n.depth == k) x.right_value(n) = -s;
    else if (n.depth > k && !l->is_leaf(n)) x.right_value(n) = -s;
  }
  return x;
}

}  // namespace

TEST(DoobMeyer, MartingaleHasNoCompensator) {
  auto l = build_trinomial(4, 1.0);
  inst::Rng rng(1);
  auto s = solve_bsde(l, gen::zero(), inst::random_leaves(*l, rng));
  auto d = doob_meyer(s.Y, gen::zero());
  for (double a : d.dA) EXPECT_NEAR(a, 0.0, 1e-14);
  for (std::size_t i = 0; i < d.dN.size(); ++i) EXPECT_NEAR(d.dN[i], s.dN[i], 1e-13);
}

TEST(DoobMeyer, LinearDriftRecovered) {
  auto l = build_binomial(5, 1.0);
  inst::Rng rng(2);
  auto s = solve_bsde(l, gen::zero(), inst::random_leaves(*l, rng));
  const double c = 0.7;
  AdaptedProcess x = s.Y;
  for (std::size_t i = 0; i < l->node_count(); ++i) x.values()[i] += c * (l->steps() - l->node_at(i).depth) * l->dt();
  auto d = doob_meyer(x, gen::zero());
  for (double a : d.dA) EXPECT_NEAR(a, c * l->dt(), 1e-14);
}

TEST(DoobMeyer, ForwardConstructionInverts) {
  inst::Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    auto l = inst::random_lattice(rng, 5, 4);
    auto g = inst::random_generator(rng, *l, inst::safe_ly(*l, 0.4), inst::safe_lz(*l, 0.8));
    auto f = inst::forward_construct(l, g, rng);
    auto d = doob_meyer(f.X.value_process(), g);
    EXPECT_LE(max_diff(d.Z, f.Z), 1e-9);
    EXPECT_LE(max_diff(d.dA, f.dA), 1e-9);
    EXPECT_LE(max_diff(d.dN, f.dN), 1e-9);
    EXPECT_GE(d.min_dA, -1e-9);
    EXPECT_LE(d.reconstruction_residual, 1e-12);
  }
}

TEST(DoobMeyer, StaircaseUnderDiscount) {
  // X = E^g[xi] + S with S a non-increasing deterministic staircase; the
  // compensator picks up dS plus the discount term r S dt on the staircase.
  auto l = build_binomial(4, 1.0);
  inst::Rng rng(4);
  const double r = 0.3;
  auto g = gen::discount(r);
  auto s = solve_bsde(l, g, inst::random_leaves(*l, rng));
  std::vector<double> stair{0.4, 0.4, 0.1, 0.05, 0.0};
  AdaptedProcess x = s.Y;
  for (std::size_t i = 0; i < l->node_count(); ++i) x.values()[i] += stair[l->node_at(i).depth];
  auto d = doob_meyer(x, g);
  for (std::size_t i = 0; i < l->interior_count(); ++i) {
    const int k = l->node_at(i).depth;
    // x_k = E[x_{k+1}] - r x_k dt + dA  with the martingale part untouched.
    const double want = stair[k] - stair[k + 1] + r * stair[k] * l->dt();
    EXPECT_NEAR(d.dA[i], want, 1e-12) << "node " << i;
  }
}

TEST(DoobMeyer, SubmartingaleRejectedWithWitness) {
  auto l = build_binomial(3, 1.0);
  AdaptedProcess x(l);
  for (std::size_t i = 0; i < l->node_count(); ++i) x.values()[i] = l->node_at(i).depth;
  try {
    doob_meyer(x, gen::zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_a_supermartingale);
    EXPECT_TRUE(e.witness().has_value());
  }
}

TEST(Reflected, FarObstacleReducesToBsde) {
  auto l = build_trinomial(3, 1.0);
  inst::Rng rng(5);
  auto xi = inst::random_leaves(*l, rng);
  auto g = gen::abs_z(0.4);
  auto r = reflected_bsde(AdaptedProcess(l, -1e6), xi, g);
  auto s = solve_bsde(l, g, xi);
  for (std::size_t i = 0; i < l->node_count(); ++i) EXPECT_NEAR(r.Y.at(i), s.Y.at(i), 1e-14);
  for (double k : r.K.values()) EXPECT_EQ(k, 0.0);
}

TEST(Reflected, SupermartingaleObstacleIsItsOwnSolution) {
  inst::Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    auto l = inst::random_lattice(rng, 5, 4);
    auto g = inst::random_generator(rng, *l, inst::safe_ly(*l, 0.4), inst::safe_lz(*l, 0.8));
    auto f = inst::forward_construct(l, g, rng);
    auto x = f.X.value_process();
    std::vector<double> xi(l->leaf_count());
    for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = x[l->leaf(p)];
    auto r = reflected_bsde(x, xi, g);
    EXPECT_LE(max_diff(r.Y.values(), x.values()), 1e-9);
  }
}

TEST(Reflected, SnellEnvelopeMatchesEnumeration) {
  inst::Rng rng(7);
  for (auto l : {build_binomial(4, 1.0), build_trinomial(3, 1.0)}) {
    AdaptedProcess x(l);
    for (double& v : x.values()) v = inst::uniform(rng, -1, 1);
    std::vector<double> xi(l->leaf_count());
    for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = x[l->leaf(p)];
    auto r = reflected_bsde(x, xi, gen::zero());
    EXPECT_NEAR(r.Y[l->root()], oracle::snell_brute_force(x), 1e-12);
    EXPECT_LE(r.skorokhod_residual, 1e-12);
  }
}

TEST(Reflected, InconsistentObstacle) {
  auto l = build_binomial(2, 1.0);
  std::vector<double> xi(l->leaf_count(), 0.0);
  try {
    reflected_bsde(AdaptedProcess(l, 1.0), xi, gen::zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::inconsistent_obstacle);
  }
}

TEST(Reflected, PenalizationIncreasesToReflected) {
  auto l = build_binomial(4, 1.0);
  AdaptedProcess put(l);
  for (std::size_t i = 0; i < l->node_count(); ++i) put.values()[i] = std::max(0.2 - l->w(l->node_at(i))[0], 0.0);
  std::vector<double> xi(l->leaf_count());
  for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = put[l->leaf(p)];
  const double target = reflected_bsde(put, xi, gen::discount(0.1)).Y[l->root()];
  double prev = -1e9;
  for (double n : {1.0, 10.0, 100.0, 1000.0, 1e5}) {
    const double y = penalized_reflected(put, xi, gen::discount(0.1), n).Y[l->root()];
    EXPECT_GE(y, prev - 1e-14);
    EXPECT_LE(y, target + 1e-12);
    prev = y;
  }
  EXPECT_NEAR(prev, target, 1e-4);
}

TEST(Mertens, ContinuousProcessHasNoCorrection) {
  auto l = build_trinomial(3, 1.0);
  inst::Rng rng(8);
  auto f = inst::forward_construct(l, gen::discount(0.2), rng);
  auto m = mertens_correct(f.X, gen::discount(0.2), MertensMode::plain);
  for (double v : m.I.values()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < l->node_count(); ++i) EXPECT_EQ(m.Xbar.at(i), f.X.value(l->node_at(i)));
}

TEST(Mertens, SingleJumpPlain) {
  auto l = build_binomial(4, 1.0);
  auto x = jump_at(l, 1, 1.0);
  auto m = mertens_correct(x, gen::zero(), MertensMode::plain);
  for (std::size_t i = 0; i < l->node_count(); ++i) {
    const NodeId n = l->node_at(i);
    EXPECT_EQ(m.I.value(n), n.depth <= 1 ? 0.0 : 1.0) << "node " << i;
  }
  EXPECT_EQ(m.I.right_value(l->node(1, 0)), 1.0);
}

TEST(Mertens, SingleJumpWeighted) {
  auto l = build_binomial(4, 1.0);
  auto x = jump_at(l, 1, 1.0);
  auto m = mertens_correct(x, gen::discount(1.0), MertensMode::weighted);
  for (std::size_t p = 0; p < l->width(2); ++p) EXPECT_NEAR(m.I.value(l->node(2, p)), std::exp(-0.25), 1e-15);
}

TEST(Mertens, PositiveRightJumpRejected) {
  auto l = build_binomial(2, 1.0);
  auto x = jump_at(l, 1, -1.0);
  try {
    mertens_correct(x, gen::zero(), MertensMode::plain);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_a_supermartingale_shape);
  }
}

TEST(Mertens, PlainNeedsMonotoneDriver) {
  auto l = build_binomial(2, 1.0);
  EXPECT_THROW(mertens_correct(jump_at(l, 1, 1.0), gen::linear(0.5, {0.0}), MertensMode::plain), Error);
}

TEST(ExpTransform, ZeroRateIsIdentity) {
  auto l = build_trinomial(3, 1.0);
  inst::Rng rng(9);
  auto f = inst::forward_construct(l, gen::abs_z(0.3), rng);
  auto t = exp_transform(gen::abs_z(0.3), f.X, 0.0);
  for (std::size_t i = 0; i < l->node_count(); ++i) EXPECT_EQ(t.x_tilde.value(l->node_at(i)), f.X.value(l->node_at(i)));
}

TEST(ExpTransform, SupermartingaleStatusPreserved) {
  inst::Rng rng(10);
  int flips = 0, bad = 0;
  for (int t = 0; t < 50; ++t) {
    auto l = build_binomial(inst::pick(rng, 4, 6), 1.0);
    auto g = gen::linear(inst::uniform(rng, 0.0, 0.5), {inst::uniform(rng, -0.5, 0.5)});
    auto f = inst::forward_construct(l, g, rng);
    LadlagProcess x = f.X;
    if (t % 2) {
      // Push one interior node down so the one-step inequality breaks there.
      const NodeId n = l->node_at(static_cast<std::size_t>(inst::pick(rng, 0, static_cast<int>(l->interior_count()) - 1)));
      x.value(n) -= 2.0;
      x.right_value(n) -= 2.0;
      ++flips;
    }
    auto tr = exp_transform(g, x);
    const bool a = check_one_step(x, g).ok();
    const bool b = check_one_step(tr.x_tilde, tr.g_tilde, 1e-9).ok();
    if (a != b) ++bad;
  }
  EXPECT_EQ(bad, 0);
  EXPECT_GT(flips, 0);
}

TEST(MertensDecompose, JumpFreeMatchesDoobMeyerBitwise) {
  inst::Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    auto l = inst::random_lattice(rng, 5, 4);
    auto g = inst::random_generator(rng, *l, inst::safe_ly(*l, 0.4), inst::safe_lz(*l, 0.8));
    auto f = inst::forward_construct(l, g, rng);
    auto a = doob_meyer(f.X.value_process(), g);
    auto b = mertens_decompose(f.X, g);
    ASSERT_EQ(a.dA.size(), b.dA.size());
    EXPECT_EQ(std::memcmp(a.dA.data(), b.dA.data(), a.dA.size() * sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(a.Z.data(), b.Z.data(), a.Z.size() * sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(a.dN.data(), b.dN.data(), a.dN.size() * sizeof(double)), 0);
  }
}

TEST(MertensDecompose, RecoversJumpsAndCompensator) {
  inst::Rng rng(12);
  inst::ForwardOptions o;
  o.jump_prob = 0.5;
  for (int t = 0; t < 30; ++t) {
    auto l = inst::random_lattice(rng, 5, 4);
    auto g = inst::random_generator(rng, *l, inst::safe_ly(*l, 0.4), inst::safe_lz(*l, 0.8));
    auto f = inst::forward_construct(l, g, rng, o);
    auto m = mertens_decompose(f.X, g);
    std::vector<double> want(f.dA.size());
    for (std::size_t i = 0; i < want.size(); ++i) want[i] = f.dA[i] + f.jump[i];
    EXPECT_LE(max_diff(m.dA, want), 1e-9);
    EXPECT_LE(max_diff(m.dA_jump, f.jump), 1e-15);
    EXPECT_LE(m.reconstruction_residual, 1e-9);
    EXPECT_GE(m.min_dA, -1e-9);
    EXPECT_FALSE(m.localization.empty());
  }
}

TEST(MertensDecompose, ClassicalMassBalance) {
  inst::Rng rng(13);
  inst::ForwardOptions o;
  o.jump_prob = 0.4;
  auto l = build_trinomial(4, 1.0);
  auto f = inst::forward_construct(l, gen::zero(), rng, o);
  auto m = mertens_decompose(f.X, gen::zero());
  double ea = 0.0, ex = 0.0;
  for (const auto& pw : enumerate_paths(*l)) {
    ea += pw.probability * m.A[pw.leaf];
    ex += pw.probability * f.X.value(pw.leaf);
  }
  EXPECT_NEAR(ea, f.X.value(l->root()) - ex, 1e-12);
}
