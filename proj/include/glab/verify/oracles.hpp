#pragma once

// Brute-force reference computations. Each one avoids the engine's
// backward-induction code path.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "glab/constraint.hpp"
#include "glab/error.hpp"
#include "glab/generator.hpp"
#include "glab/lattice.hpp"
#include "glab/process.hpp"

namespace glab::oracle {

/// E[xi] as a sum over enumerated paths.
inline double path_expectation(const Lattice& lat, std::span<const double> leaves) {
  double s = 0.0;
  for (const auto& pw : enumerate_paths(lat)) s += pw.probability * leaves[pw.leaf.pos];
  return s;
}

/// Implicit scheme with g = -r y: Y_0 = E[xi] / (1 + r dt)^N.
inline double discounted_expectation(const Lattice& lat, std::span<const double> leaves, double r) {
  return path_expectation(lat, leaves) / std::pow(1.0 + r * lat.dt(), lat.steps());
}

/// sup over every stopping time (value slots) of E[X_tau], by listing the
/// value of each stopping time in every subtree and maximizing at the end.
inline double snell_brute_force(const AdaptedProcess& x, std::size_t* count = nullptr) {
  const Lattice& L = *x.lattice();
  std::function<std::vector<double>(const NodeId&)> values = [&](const NodeId& n) {
    std::vector<double> out{x[n]};
    if (L.is_leaf(n)) return out;
    std::vector<std::vector<double>> kids;
    for (int c = 0; c < L.branching(); ++c) kids.push_back(values(L.child(n, c)));
    // Cartesian product of the children's stopping-time values.
    std::vector<double> acc{0.0};
    for (int c = 0; c < L.branching(); ++c) {
      std::vector<double> next;
      next.reserve(acc.size() * kids[c].size());
      for (double a : acc)
        for (double v : kids[c]) next.push_back(a + L.prob(n, c) * v);
      acc = std::move(next);
    }
    out.insert(out.end(), acc.begin(), acc.end());
    return out;
  };
  auto all = values(L.root());
  if (count) *count = all.size();
  return *std::max_element(all.begin(), all.end());
}

/// Value of the dual problem with one fixed control per interior node,
/// d = 1 only: linear tilt, scalar regression against dW - v dt,
/// y = E^q[S'] + (g(y, z) - delta(v)) dt.
inline double dual_fixed_control(const Lattice& L, const Generator& g, const ConstraintSet& o,
                                 std::span<const double> xi, std::span<const double> control) {
  if (L.dimension() != 1) throw Error(ErrorCode::invalid_parameter, "oracle is one-dimensional");
  std::vector<double> s(L.node_count(), 0.0);
  for (std::size_t p = 0; p < L.leaf_count(); ++p) s[L.leaf(p).index] = xi[p];
  const double dt = L.dt();
  for (int k = L.steps() - 1; k >= 0; --k) {
    for (std::size_t p = 0; p < L.width(k); ++p) {
      const NodeId n = L.node(k, p);
      const double v = control[n.index];
      const int b = L.branching();
      std::vector<double> q(b), dd(b), y(b);
      for (int c = 0; c < b; ++c) {
        const double dw = L.increment(n, c)[0];
        q[c] = L.prob(n, c) * (1.0 + v * dw);
        dd[c] = dw - v * dt;
        y[c] = s[L.child(n, c).index];
      }
      double m = 0, md = 0;
      for (int c = 0; c < b; ++c) {
        m += q[c] * y[c];
        md += q[c] * dd[c];
      }
      double cov = 0, var = 0;
      for (int c = 0; c < b; ++c) {
        cov += q[c] * (y[c] - m) * (dd[c] - md);
        var += q[c] * (dd[c] - md) * (dd[c] - md);
      }
      const double z[1] = {cov / var};
      const double u[1] = {v};
      const double delta = support(o, u);
      const GenPoint at{k, L.grid().time(k), n.index};
      double val = m;
      for (int it = 0; it < 200; ++it) val = m + (g(at, val, z) - delta) * dt;
      s[n.index] = val;
    }
  }
  return s[0];
}

/// max over every assignment of a control to each interior node.
inline double dual_enumeration(const Lattice& L, const Generator& g, const ConstraintSet& o,
                               std::span<const double> xi, const std::vector<double>& controls) {
  const std::size_t nodes = L.interior_count();
  double total = 1;
  for (std::size_t i = 0; i < nodes; ++i) total *= controls.size();
  if (total > 1e7) throw Error(ErrorCode::too_large, "too many control assignments");
  std::vector<std::size_t> pick(nodes, 0);
  std::vector<double> ctl(L.node_count(), 0.0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t i = 0; i < nodes; ++i) ctl[i] = controls[pick[i]];
    best = std::max(best, dual_fixed_control(L, g, o, xi, ctl));
    std::size_t i = 0;
    while (i < nodes && ++pick[i] == controls.size()) pick[i++] = 0;
    if (i == nodes) break;
  }
  return best;
}

struct DoobBound {
  double expected_crossings = 0.0;
  double bound = 0.0;  // E[(X_0 ^ b) - (X_T ^ b)] / (b - a)
};

/// Classical down-crossing count along t_0..t_N and Doob's bound.
inline DoobBound classical_doob(const AdaptedProcess& x, double a, double b) {
  const Lattice& L = *x.lattice();
  DoobBound r;
  for (const auto& pw : enumerate_paths(L)) {
    auto path = L.path_to(pw.leaf);
    int count = 0;
    bool above = false;
    for (const auto& n : path) {
      const double v = x[n];
      if (v >= b) above = true;
      if (above && v <= a) {
        ++count;
        above = false;
      }
    }
    r.expected_crossings += pw.probability * count;
    r.bound += pw.probability * (std::min(x[L.root()], b) - std::min(x[pw.leaf], b));
  }
  r.bound /= (b - a);
  return r;
}

/// Symmetric trinomial, g = 0, alpha = 1: the largest edge increment of the
/// non-increasing part, max(x_mid - x, (x_up + x_down)/2 - x) over nodes.
inline double classical_optional(const LadlagProcess& x) {
  const Lattice& L = *x.lattice();
  if (L.branching() != 3 || L.dimension() != 1)
    throw Error(ErrorCode::invalid_parameter, "oracle needs a one-dimensional trinomial lattice");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    const double xd = x.value(L.child(n, 0)), xm = x.value(L.child(n, 1)), xu = x.value(L.child(n, 2));
    worst = std::max({worst, xm - x.value(n), 0.5 * (xu + xd) - x.value(n)});
  }
  return worst;
}

}  // namespace glab::oracle
