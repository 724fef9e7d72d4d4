#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "glab/error.hpp"
#include "glab/generator.hpp"
#include "glab/gexp.hpp"
#include "glab/lattice.hpp"
#include "glab/process.hpp"

namespace glab {

/// X_{k+1} = X_k - g dt - dA_k + Z_k.dW + dN along every edge. dA_k is the
/// increment of A over (t_k, t_{k+1}] and is stored at the depth-k node
/// (known at t_k, hence predictable); for the Mertens pipeline it includes
/// the right-jump at t_k, reported separately in dA_jump.
struct Decomposition {
  LatticePtr lattice;
  int dim = 1;
  std::vector<double> Z;        // interior * d
  std::vector<double> dA;       // interior
  std::vector<double> dA_jump;  // interior
  std::vector<double> dN;       // interior * branching
  AdaptedProcess A;             // A_{t_k}, A_0 = 0
  double reconstruction_residual = 0.0;
  double min_dA = std::numeric_limits<double>::infinity();

  std::span<const double> z(const NodeId& n) const {
    return std::span<const double>(Z).subspan(n.index * dim, dim);
  }
};

struct CompensatorStep {
  Regression reg;
  double dA = 0.0;
};

/// One node of a compensator extraction: regress the children, then
/// dA = x_now - E[x_next] - (g(y, Z) + drift) dt.
inline CompensatorStep compensator_step(const Lattice& L, const NodeId& n, double x_now,
                                        std::span<const double> child, double y_for_g,
                                        const Generator& g, double drift = 0.0) {
  auto e = L.edges(n);
  CompensatorStep s{regress(e.probs, e.increments, L.dimension(), child), 0.0};
  const GenPoint at{n.depth, L.grid().time(n.depth), n.index};
  s.dA = x_now - s.reg.mean - (g(at, y_for_g, s.reg.z) + drift) * L.dt();
  return s;
}

namespace detail {

inline Decomposition empty_decomposition(const LatticePtr& lat) {
  const Lattice& L = *lat;
  Decomposition d;
  d.lattice = lat;
  d.dim = L.dimension();
  d.Z.assign(L.interior_count() * d.dim, 0.0);
  d.dA.assign(L.interior_count(), 0.0);
  d.dA_jump.assign(L.interior_count(), 0.0);
  d.dN.assign(L.interior_count() * L.branching(), 0.0);
  d.A = AdaptedProcess(lat, 0.0);
  return d;
}

inline void accumulate_A(Decomposition& d) {
  const Lattice& L = *d.lattice;
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    for (int c = 0; c < L.branching(); ++c) d.A[L.child(n, c)] = d.A[n] + d.dA[i];
    d.min_dA = std::min(d.min_dA, d.dA[i]);
  }
}

/// max |x_{k+1,i} - (x_k - g(y_k, Z) dt - dA + Z.(dW_i - mean dW) + dN_i)|.
inline double reconstruction_residual(const Decomposition& d, const std::vector<double>& x,
                                      const std::vector<double>& y_for_g, const Generator& g) {
  const Lattice& L = *d.lattice;
  const int dim = L.dimension(), b = L.branching();
  double worst = 0.0;
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    const GenPoint at{n.depth, L.grid().time(n.depth), i};
    auto e = L.edges(n);
    auto z = d.z(n);
    std::vector<double> bar(dim, 0.0);
    for (int c = 0; c < b; ++c)
      for (int a = 0; a < dim; ++a) bar[a] += e.probs[c] * e.increments[c * dim + a];
    const double base = x[i] - g(at, y_for_g[i], z) * L.dt() - d.dA[i];
    for (int c = 0; c < b; ++c) {
      double v = base + d.dN[i * b + c];
      for (int a = 0; a < dim; ++a) v += z[a] * (e.increments[c * dim + a] - bar[a]);
      worst = std::max(worst, std::abs(x[L.child(n, c).index] - v));
    }
  }
  return worst;
}

}  // namespace detail

/// Doob-Meyer decomposition of a g-supermartingale on the grid.
inline Decomposition doob_meyer(const AdaptedProcess& x, const Generator& g, double tol = 1e-9) {
  const LatticePtr& lat = x.lattice();
  const Lattice& L = *lat;
  const int d = L.dimension(), b = L.branching();
  Decomposition out = detail::empty_decomposition(lat);
  std::vector<double> child(b);
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    for (int c = 0; c < b; ++c) child[c] = x[L.child(n, c)];
    CompensatorStep s = compensator_step(L, n, x[n], child, x[n], g);
    if (s.dA < -tol)
      throw Error(ErrorCode::not_a_supermartingale,
                  "compensator increment " + std::to_string(s.dA) + " < 0 at node " + std::to_string(i), i);
    std::copy(s.reg.z.begin(), s.reg.z.end(), out.Z.begin() + i * d);
    std::copy(s.reg.residual.begin(), s.reg.residual.end(), out.dN.begin() + i * b);
    out.dA[i] = s.dA;
  }
  detail::accumulate_A(out);
  out.reconstruction_residual = detail::reconstruction_residual(out, x.values(), x.values(), g);
  return out;
}

// ---------------------------------------------------------------------------
// Reflected BSDE with lower obstacle

struct ReflectedSolution {
  AdaptedProcess Y;
  std::vector<double> Z;   // interior * d
  std::vector<double> dN;  // interior * branching
  std::vector<double> dK;  // interior: push applied at the depth-k node
  AdaptedProcess K;        // K_{t_k} including the push at t_k
  double skorokhod_residual = 0.0;
  int max_iterations = 0;
};

inline ReflectedSolution reflected_bsde(const AdaptedProcess& obstacle, std::span<const double> xi,
                                        const Generator& g, const SolverOptions& opt = {}) {
  const LatticePtr& lat = obstacle.lattice();
  const Lattice& L = *lat;
  const int d = L.dimension(), b = L.branching();
  check_step(g, L.dt());
  if (xi.size() != L.leaf_count()) throw Error(ErrorCode::invalid_parameter, "need one terminal value per leaf");
  ReflectedSolution s{AdaptedProcess(lat, 0.0), std::vector<double>(L.interior_count() * d, 0.0),
                      std::vector<double>(L.interior_count() * b, 0.0),
                      std::vector<double>(L.interior_count(), 0.0), AdaptedProcess(lat, 0.0), 0.0, 0};
  for (std::size_t p = 0; p < L.leaf_count(); ++p) {
    const NodeId l = L.leaf(p);
    if (xi[p] < obstacle[l])
      throw Error(ErrorCode::inconsistent_obstacle, "terminal value below obstacle at leaf " + std::to_string(p), l.index);
    s.Y[l] = xi[p];
  }
  std::vector<double> child(b);
  for (std::size_t i = L.interior_count(); i-- > 0;) {
    const NodeId n = L.node_at(i);
    for (int c = 0; c < b; ++c) child[c] = s.Y[L.child(n, c)];
    auto e = L.edges(n);
    Regression r = regress(e.probs, e.increments, d, child);
    const GenPoint at{n.depth, L.grid().time(n.depth), i};
    const std::span<const double> z(r.z);
    StepResult st = implicit_step(r.mean, L.dt(), [&](double y) { return g(at, y, z); }, opt, i);
    s.max_iterations = std::max(s.max_iterations, st.iterations);
    const double y = std::max(st.y, obstacle[n]);
    s.Y[n] = y;
    s.dK[i] = y - st.y;
    std::copy(r.z.begin(), r.z.end(), s.Z.begin() + i * d);
    std::copy(r.residual.begin(), r.residual.end(), s.dN.begin() + i * b);
    s.skorokhod_residual = std::max(s.skorokhod_residual, std::abs((y - obstacle[n]) * s.dK[i]));
  }
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    if (n.depth == 0) s.K[n] = s.dK[i];
    for (int c = 0; c < b; ++c) {
      const NodeId ch = L.child(n, c);
      s.K[ch] = s.K[n] + (L.is_leaf(ch) ? 0.0 : s.dK[ch.index]);
    }
  }
  return s;
}

/// Penalized approximation with driver g + n (obstacle - y)^+. The penalty
/// is handled in closed form so the y-contraction only depends on g.
inline BSDESolution penalized_reflected(const AdaptedProcess& obstacle, std::span<const double> xi,
                                        const Generator& g, double n_pen,
                                        const SolverOptions& opt = {}) {
  const LatticePtr& lat = obstacle.lattice();
  const Lattice& L = *lat;
  const int d = L.dimension(), b = L.branching();
  check_step(g, L.dt());
  if (!(n_pen >= 0.0)) throw Error(ErrorCode::invalid_parameter, "penalty must be >= 0");
  const double dt = L.dt();
  BSDESolution s{AdaptedProcess(lat, kNaN), std::vector<double>(L.interior_count() * d, kNaN),
                 std::vector<double>(L.interior_count() * b, kNaN), d, {}};
  for (std::size_t p = 0; p < L.leaf_count(); ++p) s.Y[L.leaf(p)] = xi[p];
  std::vector<double> child(b);
  for (std::size_t i = L.interior_count(); i-- > 0;) {
    const NodeId n = L.node_at(i);
    for (int c = 0; c < b; ++c) child[c] = s.Y[L.child(n, c)];
    auto e = L.edges(n);
    Regression r = regress(e.probs, e.increments, d, child);
    const GenPoint at{n.depth, L.grid().time(n.depth), i};
    const std::span<const double> z(r.z);
    auto gy = [&](double y) { return g(at, y, z); };
    StepResult st = implicit_step(r.mean, dt, gy, opt, i);
    const double x = obstacle[n];
    if (st.y < x) {
      // y = (c + n x dt + g(y) dt) / (1 + n dt), solved by the same iteration.
      const double shrink = 1.0 + n_pen * dt;
      st = implicit_step((r.mean + n_pen * x * dt) / shrink, dt / shrink, gy, opt, i);
    }
    s.Y[n] = st.y;
    s.diagnostics.max_iterations = std::max(s.diagnostics.max_iterations, st.iterations);
    std::copy(r.z.begin(), r.z.end(), s.Z.begin() + i * d);
    std::copy(r.residual.begin(), r.residual.end(), s.dN.begin() + i * b);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Mertens correction

enum class MertensMode { plain, weighted };

struct MertensCorrection {
  LadlagProcess I;     // I_{t_k} and I_{t_k+} = I_{t_k} + jump_k
  AdaptedProcess Xbar; // value + I
};

inline MertensCorrection mertens_correct(const LadlagProcess& x, const Generator& g, MertensMode mode,
                                         double tol = 1e-9) {
  const LatticePtr& lat = x.lattice();
  const Lattice& L = *lat;
  if (mode == MertensMode::plain && !g.monotone_in_y())
    throw Error(ErrorCode::invalid_parameter, "plain Mertens correction needs g non-increasing in y");
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    if (x.right_jump(n) < -tol)
      throw Error(ErrorCode::not_a_supermartingale_shape,
                  "value < right_value at node " + std::to_string(i), i);
  }
  const double lip = mode == MertensMode::weighted ? g.lip_y() : 0.0;
  MertensCorrection out{LadlagProcess(lat), AdaptedProcess(lat, 0.0)};
  std::vector<double> I(L.node_count(), 0.0);
  for (std::size_t i = 1; i < L.node_count(); ++i) {
    const NodeId n = L.node_at(i);
    const double tk = L.grid().time(n.depth);
    double acc = 0.0;
    // Direct sum over strict ancestors (no recursive rescaling).
    NodeId a = n;
    while (a.depth > 0) {
      a = L.parent(a);
      const double w = lip == 0.0 ? 1.0 : std::exp(lip * (L.grid().time(a.depth) - tk));
      acc += w * x.right_jump(a);
    }
    I[i] = acc;
  }
  for (std::size_t i = 0; i < L.node_count(); ++i) {
    const NodeId n = L.node_at(i);
    out.I.value(n) = I[i];
    if (i < L.interior_count()) out.I.right_value(n) = I[i] + x.right_jump(n);
    out.Xbar[n] = x.value(n) + I[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exponential transform

struct ExpTransform {
  Generator g_tilde;
  LadlagProcess x_tilde;
  double lip = 0.0;
};

/// Discrete numeraire rho_k = (1 - L dt)^{-k} applied at t_k and t_k+.
inline ExpTransform exp_transform(const Generator& g, const LadlagProcess& x, double lip) {
  const LatticePtr& lat = x.lattice();
  const Lattice& L = *lat;
  ExpTransform t{gen::exp_transformed(g, lip, L.dt()), LadlagProcess(lat), lip};
  for (std::size_t i = 0; i < L.node_count(); ++i) {
    const NodeId n = L.node_at(i);
    const double rho = gen::exp_weight(lip, L.dt(), n.depth);
    t.x_tilde.value(n) = rho * x.value(n);
    if (i < L.interior_count()) t.x_tilde.right_value(n) = rho * x.right_value(n);
  }
  return t;
}

inline ExpTransform exp_transform(const Generator& g, const LadlagProcess& x) {
  return exp_transform(g, x, g.lip_y());
}

// ---------------------------------------------------------------------------
// Full Mertens decomposition

/// E[I_T^{1/p}]^p against C_L (1 + |X_0| + E[(X_T^-)^p]^{1/p} + |E^g_{0,T}[0]|)
/// with I the plain jump sum, p = 2 and C_L = e^{2LT}. Reported, not enforced.
struct IBoundReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double c_l = 1.0;
  double p = 2.0;
  bool holds = true;
};

struct MertensDecomposition : Decomposition {
  MertensCorrection correction;
  std::vector<double> eta;   // interior
  std::vector<double> dAbar; // interior: compensator of X-bar under the drift-adjusted driver
  std::vector<int> localization;  // levels n visited by the theta_n loop
  IBoundReport ibound;
};

inline IBoundReport i_bound(const LadlagProcess& x, const Generator& g, double p = 2.0) {
  const LatticePtr& lat = x.lattice();
  const Lattice& L = *lat;
  IBoundReport r;
  r.p = p;
  r.c_l = std::exp(2.0 * g.lip_y() * L.grid().horizon);
  double e_root = 0.0, e_neg = 0.0;
  for (const auto& pw : enumerate_paths(L)) {
    double it = 0.0;
    auto path = L.path_to(pw.leaf);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) it += x.right_jump(path[k]);
    e_root += pw.probability * std::pow(std::max(it, 0.0), 1.0 / p);
    e_neg += pw.probability * std::pow(std::max(-x.value(pw.leaf), 0.0), p);
  }
  std::vector<double> zeros(L.leaf_count(), 0.0);
  const double e0 = g_expectation0(lat, g, zeros);
  r.lhs = std::pow(e_root, p);
  r.rhs = r.c_l * (1.0 + std::abs(x.value(L.root())) + std::pow(e_neg, 1.0 / p) + std::abs(e0));
  r.holds = r.lhs <= r.rhs;
  return r;
}

/// Weighted correction, localization, compensator of X-bar under
/// g(X_+, Z) + eta I_+, recombination dA = dI + dAbar + eta I_+ dt.
inline MertensDecomposition mertens_decompose(const LadlagProcess& x, const Generator& g,
                                              double tol = 1e-9) {
  const LatticePtr& lat = x.lattice();
  const Lattice& L = *lat;
  const int d = L.dimension(), b = L.branching();
  check_step(g, L.dt());
  MertensDecomposition out;
  static_cast<Decomposition&>(out) = detail::empty_decomposition(lat);
  out.correction = mertens_correct(x, g, MertensMode::weighted, tol);
  const LadlagProcess& I = out.correction.I;
  const AdaptedProcess& xbar = out.correction.Xbar;
  out.eta.assign(L.interior_count(), 0.0);
  out.dAbar.assign(L.interior_count(), 0.0);

  // theta_n = first time I >= n; stop once it never fires before T.
  const AdaptedProcess i_left(lat, I.values());
  for (int level = 1;; ++level) {
    out.localization.push_back(level);
    const StoppingTime theta = first_hitting_time(i_left, level);
    bool interior_hit = false;
    for (const NodeId& n : theta.stopped_nodes()) interior_hit = interior_hit || !L.is_leaf(n);
    if (!interior_hit) break;
  }

  const double lip = g.lip_y();
  std::vector<double> child(b), rv(L.interior_count());
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    rv[i] = x.right_value(n);
    for (int c = 0; c < b; ++c) child[c] = xbar[L.child(n, c)];
    const double iplus = I.right_value(n);
    // eta from the difference quotient of g between X-bar and X_+.
    double eta = 0.0;
    if (iplus != 0.0) {
      auto e = L.edges(n);
      Regression r = regress(e.probs, e.increments, d, child);
      const GenPoint at{n.depth, L.grid().time(n.depth), i};
      eta = std::clamp((g(at, xbar[n], r.z) - g(at, rv[i], r.z)) / iplus, -lip, lip);
    }
    CompensatorStep s = compensator_step(L, n, xbar[n], child, rv[i], g, eta * iplus);
    const double dI = I.value(L.child(n, 0)) - I.value(n);
    const double dA = dI + s.dA + eta * iplus * L.dt();
    const double jump = x.right_jump(n);
    if (dA < -tol || dA - jump < -tol)
      throw Error(ErrorCode::not_a_supermartingale,
                  "compensator increment < 0 at node " + std::to_string(i), i);
    out.eta[i] = eta;
    out.dAbar[i] = s.dA;
    out.dA[i] = dA;
    out.dA_jump[i] = jump;
    std::copy(s.reg.z.begin(), s.reg.z.end(), out.Z.begin() + i * d);
    std::copy(s.reg.residual.begin(), s.reg.residual.end(), out.dN.begin() + i * b);
  }
  detail::accumulate_A(out);
  out.reconstruction_residual = detail::reconstruction_residual(out, x.values(), rv, g);
  out.ibound = i_bound(x, g);
  return out;
}

}  // namespace glab
