#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "glab/lattice.hpp"

using namespace glab;

TEST(Lattice, BinomialOneStep) {
  auto l = build_binomial(1, 1.0);
  EXPECT_EQ(l->branching(), 2);
  EXPECT_EQ(l->leaf_count(), 2u);
  EXPECT_DOUBLE_EQ(l->increment(l->root(), 0)[0], 1.0);
  EXPECT_DOUBLE_EQ(l->increment(l->root(), 1)[0], -1.0);
  EXPECT_DOUBLE_EQ(l->prob(l->root(), 0), 0.5);
  EXPECT_DOUBLE_EQ(l->prob(l->root(), 1), 0.5);
}

TEST(Lattice, BinomialThreeSteps) {
  auto l = build_binomial(3, 1.0);
  EXPECT_EQ(l->leaf_count(), 8u);
  EXPECT_DOUBLE_EQ(l->dt(), 1.0 / 3.0);
  EXPECT_NEAR(std::abs(l->increment(l->root(), 0)[0]), std::sqrt(1.0 / 3.0), 1e-15);
}

TEST(Lattice, VarianceMatchesDt) {
  for (auto l : {build_binomial(2, 2.0), build_trinomial(1, 1.0), build_trinomial(4, 0.7)}) {
    for (std::size_t i = 0; i < l->interior_count(); ++i) {
      const NodeId n = l->node_at(i);
      double m = 0, v = 0;
      for (int c = 0; c < l->branching(); ++c) {
        const double dw = l->increment(n, c)[0];
        m += l->prob(n, c) * dw;
        v += l->prob(n, c) * dw * dw;
      }
      EXPECT_NEAR(m, 0.0, 1e-15);
      EXPECT_NEAR(v, l->dt(), 1e-14);
    }
  }
}

TEST(Lattice, TrinomialTwoStepsHasNineLeaves) { EXPECT_EQ(build_trinomial(2, 1.0)->leaf_count(), 9u); }

TEST(Lattice, RejectsBadGrid) {
  EXPECT_THROW(build_binomial(0, 1.0), Error);
  EXPECT_THROW(build_trinomial(2, 0.0), Error);
  EXPECT_THROW(build_binomial(2, -1.0), Error);
}

TEST(Lattice, ProductConcatenatesIncrements) {
  auto f = build_binomial(2, 1.0);
  auto p = build_product({f, f});
  EXPECT_EQ(p->dimension(), 2);
  EXPECT_EQ(p->branching(), 4);
  double cov = 0.0;
  for (int c = 0; c < 4; ++c) cov += p->prob(p->root(), c) * p->increment(p->root(), c)[0] * p->increment(p->root(), c)[1];
  EXPECT_NEAR(cov, 0.0, 1e-15);
}

TEST(Lattice, ChildIndexing) {
  auto l = build_trinomial(3, 1.0);
  const NodeId n = l->node(1, 2);
  const NodeId c = l->child(n, 1);
  EXPECT_EQ(c.depth, 2);
  EXPECT_EQ(c.pos, 7u);
  EXPECT_EQ(l->parent(c).index, n.index);
  EXPECT_EQ(l->child_slot(c), 1);
}

TEST(Lattice, NodeExpectation) {
  auto b = build_binomial(1, 1.0);
  auto t = build_trinomial(1, 1.0);
  const double v1[] = {1.0, -1.0};
  EXPECT_DOUBLE_EQ(node_expectation(*b, b->root(), v1), 0.0);
  const double v2[] = {1.0, 1.0, 1.0};
  EXPECT_NEAR(node_expectation(*t, t->root(), v2), 1.0, 1e-15);
  const double v3[] = {3.0, 1.0}, w[] = {0.25, 0.75};
  EXPECT_DOUBLE_EQ(node_expectation(*b, b->root(), v3, std::span<const double>(w)), 1.5);
}

TEST(Lattice, NodeExpectationErrors) {
  auto b = build_binomial(1, 1.0);
  const double three[] = {1, 2, 3};
  try {
    node_expectation(*b, b->root(), three);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_parameter);
  }
  const double v[] = {1, 2}, w[] = {0.3, 0.3};
  try {
    node_expectation(*b, b->root(), v, std::span<const double>(w));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_measure);
  }
}

TEST(Lattice, EnumeratePaths) {
  auto b = build_binomial(2, 1.0);
  auto pb = enumerate_paths(*b);
  ASSERT_EQ(pb.size(), 4u);
  for (const auto& p : pb) EXPECT_DOUBLE_EQ(p.probability, 0.25);
  auto t = build_trinomial(1, 1.0);
  auto pt = enumerate_paths(*t);
  EXPECT_NEAR(pt[0].probability, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(pt[1].probability, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(pt[2].probability, 1.0 / 6.0, 1e-15);
  for (auto l : {build_trinomial(5, 1.0), build_product({build_binomial(3, 1), build_trinomial(3, 1)})}) {
    double s = 0;
    for (const auto& p : enumerate_paths(*l)) s += p.probability;
    EXPECT_NEAR(s, 1.0, 1e-13);
  }
}

TEST(Lattice, EnumerateCap) {
  auto l = build_binomial(10, 1.0);
  try {
    enumerate_paths(*l, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::too_large);
  }
}

TEST(Lattice, FromJson) {
  auto l = lattice_from_json({{"kind", "trinomial"}, {"steps", 2}, {"horizon", 0.5}});
  EXPECT_EQ(l->branching(), 3);
  EXPECT_DOUBLE_EQ(l->dt(), 0.25);
  auto p = lattice_from_json({{"kind", "binomial"}, {"steps", 2}, {"horizon", 1}, {"dimension", 2}});
  EXPECT_EQ(p->dimension(), 2);
  EXPECT_THROW(lattice_from_json({{"kind", "pentanomial"}, {"steps", 2}, {"horizon", 1}}), Error);
}
