#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "glab/error.hpp"
#include "glab/generator.hpp"
#include "glab/lattice.hpp"
#include "glab/process.hpp"

namespace glab {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One-step transition used by a backward solve: child weights and the
/// increments Z is regressed against (branching x d, row-major).
struct KernelView {
  std::span<const double> probs;
  std::span<const double> increments;
};

struct Regression {
  std::vector<double> z;
  double mean = 0.0;
  std::vector<double> residual;  // v_i - mean - z.(D_i - Dbar)
};

/// Weighted least squares of `values` on the centred increments.
inline Regression regress(std::span<const double> q, std::span<const double> inc, int d,
                          std::span<const double> values) {
  const std::size_t b = q.size();
  Eigen::VectorXd dbar = Eigen::VectorXd::Zero(d);
  double mean = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    mean += q[i] * values[i];
    for (int a = 0; a < d; ++a) dbar[a] += q[i] * inc[i * d + a];
  }
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < b; ++i) {
    Eigen::VectorXd di(d);
    for (int a = 0; a < d; ++a) di[a] = inc[i * d + a] - dbar[a];
    c.noalias() += q[i] * di * di.transpose();
    rhs += q[i] * (values[i] - mean) * di;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
    throw Error(ErrorCode::numerical_failure, "singular one-step covariance");
  Eigen::VectorXd z = ldlt.solve(rhs);
  Regression r;
  r.z.assign(z.data(), z.data() + d);
  r.mean = mean;
  r.residual.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    double s = values[i] - mean;
    for (int a = 0; a < d; ++a) s -= z[a] * (inc[i * d + a] - dbar[a]);
    r.residual[i] = s;
  }
  return r;
}

struct SolverOptions {
  double y_tol = 1e-13;
  int max_iterations = 100;
};

struct StepResult {
  double y = 0.0;
  int iterations = 0;
};

/// Fixed point of y = c + f(y) * dt.
template <class F>
StepResult implicit_step(double c, double dt, F&& f, const SolverOptions& opt = {},
                         std::size_t node = 0) {
  double y = c;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const double next = c + f(y) * dt;
    if (!std::isfinite(next))
      throw Error(ErrorCode::numerical_failure, "non-finite value in implicit step", node);
    const double diff = std::abs(next - y);
    y = next;
    if (diff <= opt.y_tol * std::max(1.0, std::abs(y))) return {y, it};
  }
  throw Error(ErrorCode::numerical_failure, "implicit step did not converge", node);
}

inline void check_step(const Generator& g, double dt) {
  if (!(g.lip_y() * dt < 0.5))
    throw Error(ErrorCode::step_too_coarse,
                "L*dt = " + std::to_string(g.lip_y() * dt) + " >= 1/2; use a larger step count");
}

struct BSDEDiagnostics {
  int max_iterations = 0;
  double max_residual = 0.0;
};

/// Y one value per node (NaN outside the solve window); Z one d-vector per
/// interior node; dN one value per edge (NaN where no step was taken).
struct BSDESolution {
  AdaptedProcess Y;
  std::vector<double> Z;
  std::vector<double> dN;
  int dim = 1;
  BSDEDiagnostics diagnostics;

  std::span<const double> z(const NodeId& n) const {
    return std::span<const double>(Z).subspan(n.index * dim, dim);
  }
};

namespace detail {

/// Backward recursion from the stopped values `xi` (at `to`) down to the
/// nodes where `from` has already stopped.
template <class Kernel, class Driver>
BSDESolution backward(const LatticePtr& lat, const StoppingTime& from, const StoppingTime& to,
                      const std::vector<double>& xi, Kernel&& kernel, Driver&& driver,
                      const SolverOptions& opt) {
  const Lattice& L = *lat;
  const int d = L.dimension();
  const int b = L.branching();
  BSDESolution s{AdaptedProcess(lat, kNaN),
                 std::vector<double>(L.interior_count() * d, kNaN),
                 std::vector<double>(L.interior_count() * b, kNaN), d, {}};
  std::vector<double> child(b);
  for (int k = L.steps(); k >= 0; --k) {
    for (std::size_t p = 0; p < L.width(k); ++p) {
      const NodeId n = L.node(k, p);
      if (from.resolved(n) < 0) continue;  // before the window opens
      if (to.resolved(n) >= 0) {
        if (to.stops_at(n)) s.Y[n] = xi[n.index];
        continue;
      }
      for (int i = 0; i < b; ++i) child[i] = s.Y[L.child(n, i)];
      const KernelView kv = kernel(n);
      Regression r = regress(kv.probs, kv.increments, d, child);
      const GenPoint at{k, L.grid().time(k), n.index};
      const std::span<const double> z(r.z);
      StepResult st = implicit_step(
          r.mean, L.dt(), [&](double y) { return driver(at, y, z); }, opt, n.index);
      s.Y[n] = st.y;
      std::copy(r.z.begin(), r.z.end(), s.Z.begin() + n.index * d);
      std::copy(r.residual.begin(), r.residual.end(), s.dN.begin() + n.index * b);
      s.diagnostics.max_iterations = std::max(s.diagnostics.max_iterations, st.iterations);
      s.diagnostics.max_residual = std::max(
          s.diagnostics.max_residual, std::abs(st.y - r.mean - driver(at, st.y, z) * L.dt()));
    }
  }
  return s;
}

inline KernelView reference_kernel(const Lattice& L, const NodeId& n) {
  auto e = L.edges(n);
  return {e.probs, e.increments};
}

}  // namespace detail

/// Solves the BSDE with driver g from `xi` (stopped at xi.time) back to
/// `from`.
inline BSDESolution solve_bsde(const LatticePtr& lat, const Generator& g, const StoppedValues& xi,
                               const StoppingTime& from, const SolverOptions& opt = {}) {
  if (xi.time.lattice() != lat || from.lattice() != lat)
    throw Error(ErrorCode::invalid_parameter, "stopping times on a different lattice");
  if (!precedes(from, xi.time)) throw Error(ErrorCode::invalid_parameter, "need from <= to pathwise");
  check_step(g, lat->dt());
  return detail::backward(
      lat, from, xi.time, xi.values,
      [&](const NodeId& n) { return detail::reference_kernel(*lat, n); },
      [&](const GenPoint& at, double y, std::span<const double> z) { return g(at, y, z); }, opt);
}

/// Whole-horizon solve from terminal leaf values.
inline BSDESolution solve_bsde(const LatticePtr& lat, const Generator& g,
                               std::span<const double> leaves, const SolverOptions& opt = {}) {
  return solve_bsde(lat, g, terminal_values(lat, leaves), StoppingTime::deterministic(lat, 0), opt);
}

/// E^g_{sigma,tau}[xi]: values at the sigma-stopped nodes.
inline StoppedValues g_expectation(const LatticePtr& lat, const Generator& g,
                                   const StoppingTime& sigma, const StoppedValues& xi,
                                   const SolverOptions& opt = {}) {
  BSDESolution s = solve_bsde(lat, g, xi, sigma, opt);
  StoppedValues out{sigma, std::vector<double>(lat->node_count(), kNaN)};
  for (const NodeId& n : sigma.stopped_nodes()) out.values[n.index] = s.Y[n];
  return out;
}

inline double g_expectation0(const LatticePtr& lat, const Generator& g,
                             std::span<const double> leaves, const SolverOptions& opt = {}) {
  return solve_bsde(lat, g, leaves, opt).Y[lat->root()];
}

// ---------------------------------------------------------------------------
// Supermartingale verification

struct Violation {
  enum class Kind { inequality, right_jump, right_value };
  Kind kind;
  std::size_t pair;  // index into the pair list (unused for right_jump)
  std::size_t node;
  int slot;
  double lhs;  // X at sigma (or value)
  double rhs;  // E^g[X_tau] (or right_value)
};

inline const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::inequality: return "inequality";
    case Violation::Kind::right_jump: return "right-jump";
    case Violation::Kind::right_value: return "right-value";
  }
  return "unknown";
}

struct SupermartingaleReport {
  std::size_t pairs_checked = 0;
  std::vector<Violation> violations;
  double worst_margin = std::numeric_limits<double>::infinity();  // min lhs - rhs
  bool ok() const { return violations.empty(); }
};

using StoppingPair = std::pair<StoppingTime, StoppingTime>;

inline constexpr std::uint64_t kDefaultPairSeed = 0x5eed2024ULL;

/// Every ordered pair of deterministic doubled-grid times plus `random`
/// seeded pairs (earliest, latest) of random stopping times.
inline std::vector<StoppingPair> default_pairs(const LatticePtr& lat, std::size_t random = 50,
                                               std::uint64_t seed = kDefaultPairSeed) {
  std::vector<StoppingPair> out;
  auto grid = doubled_grid_times(lat);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i; j < grid.size(); ++j) out.emplace_back(grid[i], grid[j]);
  std::mt19937_64 rng(seed);
  for (std::size_t r = 0; r < random; ++r) {
    StoppingTime a = random_stopping_time(lat, rng);
    StoppingTime b = random_stopping_time(lat, rng);
    out.emplace_back(earliest(a, b), latest(a, b));
  }
  return out;
}

/// X_sigma >= E^g_{sigma,tau}[X_tau] for each pair, value >= right_value at
/// every interior node, and right_value >= E^g[X_tau] where tau lies beyond t_k.
inline SupermartingaleReport check_supermartingale(const LadlagProcess& x, const Generator& g,
                                                   const std::vector<StoppingPair>& pairs,
                                                   double tol = 1e-9,
                                                   const SolverOptions& opt = {}) {
  const LatticePtr& lat = x.lattice();
  SupermartingaleReport rep;
  for (std::size_t i = 0; i < lat->interior_count(); ++i) {
    const NodeId n = lat->node_at(i);
    rep.worst_margin = std::min(rep.worst_margin, x.right_jump(n));
    if (x.value(n) < x.right_value(n) - tol)
      rep.violations.push_back({Violation::Kind::right_jump, 0, i, slot_of(n.depth, false),
                                x.value(n), x.right_value(n)});
  }
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto& [sigma, tau] = pairs[pi];
    StoppedValues xt = evaluate_at(x, tau);
    StoppedValues e = g_expectation(lat, g, sigma, xt, opt);
    ++rep.pairs_checked;
    for (const NodeId& n : sigma.stopped_nodes()) {
      const int slot = sigma.slot_at(n);
      const double lhs = x.at_slot(n, slot);
      const double rhs = e.values[n.index];
      rep.worst_margin = std::min(rep.worst_margin, lhs - rhs);
      if (lhs < rhs - tol) rep.violations.push_back({Violation::Kind::inequality, pi, n.index, slot, lhs, rhs});
      // tau strictly after t_k on this node: the right limit must dominate too.
      const bool same = tau.stops_at(n) && tau.slot_at(n) == slot_of(n.depth, false);
      if (!is_right_slot(slot) && !lat->is_leaf(n) && !same) {
        const double r = x.right_value(n);
        rep.worst_margin = std::min(rep.worst_margin, r - rhs);
        if (r < rhs - tol)
          rep.violations.push_back({Violation::Kind::right_value, pi, n.index, slot_of(n.depth, true), r, rhs});
      }
    }
  }
  return rep;
}

inline SupermartingaleReport check_supermartingale(const LadlagProcess& x, const Generator& g,
                                                   double tol = 1e-9) {
  return check_supermartingale(x, g, default_pairs(x.lattice()), tol);
}

/// Cheap one-step version on the doubled grid: value >= right_value and
/// right_value_k >= E^g_{t_k, t_{k+1}}[X_{t_{k+1}}] with the implicit
/// scheme. Deterministic-pair checks reduce to these by time consistency
/// and monotonicity of the one-step map.
inline SupermartingaleReport check_one_step(const LadlagProcess& x, const Generator& g,
                                            double tol = 1e-9, const SolverOptions& opt = {}) {
  const LatticePtr& lat = x.lattice();
  const Lattice& L = *lat;
  check_step(g, L.dt());
  SupermartingaleReport rep;
  std::vector<double> child(L.branching());
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    rep.worst_margin = std::min(rep.worst_margin, x.right_jump(n));
    if (x.value(n) < x.right_value(n) - tol)
      rep.violations.push_back({Violation::Kind::right_jump, 0, i, slot_of(n.depth, false),
                                x.value(n), x.right_value(n)});
    for (int c = 0; c < L.branching(); ++c) child[c] = x.value(L.child(n, c));
    auto kv = detail::reference_kernel(L, n);
    Regression r = regress(kv.probs, kv.increments, L.dimension(), child);
    const GenPoint at{n.depth, L.grid().time(n.depth), i};
    const std::span<const double> z(r.z);
    const double e = implicit_step(r.mean, L.dt(), [&](double y) { return g(at, y, z); }, opt, i).y;
    rep.worst_margin = std::min(rep.worst_margin, x.right_value(n) - e);
    if (x.right_value(n) < e - tol)
      rep.violations.push_back({Violation::Kind::right_value, 0, i, slot_of(n.depth, true), x.right_value(n), e});
  }
  rep.pairs_checked = L.interior_count();
  return rep;
}

// ---------------------------------------------------------------------------
// Linearization certificate

struct LinearizationCertificate {
  std::vector<double> lambda;  // per interior node
  std::vector<double> eta;     // per interior node, d components
  std::vector<double> beta;    // per node, product of 1/(1 - lambda dt) from the root
  std::vector<double> q;       // per edge
  double y0 = 0.0, y0_prime = 0.0;
  double reconstructed = 0.0;  // sum over paths of Q-weight * beta * (xi - xi')
  double reconstruction_error = 0.0;
  bool beta_in_range = true;   // beta in [e^{-LT}, 1] (monotone g only)
};

inline LinearizationCertificate linearize_pair(const LatticePtr& lat, const Generator& g,
                                               std::span<const double> xi,
                                               std::span<const double> xi_prime,
                                               const SolverOptions& opt = {}) {
  const Lattice& L = *lat;
  const int d = L.dimension(), b = L.branching();
  const double dt = L.dt();
  BSDESolution s = solve_bsde(lat, g, xi, opt);
  BSDESolution sp = solve_bsde(lat, g, xi_prime, opt);
  LinearizationCertificate c;
  c.lambda.assign(L.interior_count(), 0.0);
  c.eta.assign(L.interior_count() * d, 0.0);
  c.q.assign(L.interior_count() * b, 0.0);
  c.beta.assign(L.node_count(), 1.0);
  std::vector<double> zmix(d);
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    const GenPoint at{n.depth, L.grid().time(n.depth), i};
    const double y = s.Y[n], yp = sp.Y[n];
    auto z = s.z(n), zp = sp.z(n);
    double lam = 0.0;
    if (std::abs(y - yp) > 1e-14) lam = (g(at, y, z) - g(at, yp, z)) / (y - yp);
    c.lambda[i] = std::clamp(lam, -g.lip_y(), g.lip_y());
    // Walk z' -> z one component at a time.
    std::copy(zp.begin(), zp.end(), zmix.begin());
    for (int a = 0; a < d; ++a) {
      const double before = g(at, yp, zmix);
      const double dz = z[a] - zp[a];
      zmix[a] = z[a];
      double e = 0.0;
      if (std::abs(dz) > 1e-14) e = (g(at, yp, zmix) - before) / dz;
      c.eta[i * d + a] = std::clamp(e, -g.lip_z(), g.lip_z());
    }
    // q_i = p_i (1 + dt eta^T C^{-1} dW_i), C the one-step covariance.
    auto e = L.edges(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int k = 0; k < b; ++k) {
      Eigen::Map<const Eigen::VectorXd> dw(e.increments.data() + k * d, d);
      cov.noalias() += e.probs[k] * dw * dw.transpose();
    }
    Eigen::Map<const Eigen::VectorXd> eta(c.eta.data() + i * d, d);
    Eigen::VectorXd w = cov.ldlt().solve(eta);
    for (int k = 0; k < b; ++k) {
      Eigen::Map<const Eigen::VectorXd> dw(e.increments.data() + k * d, d);
      const double qk = e.probs[k] * (1.0 + dt * w.dot(dw));
      if (!(qk > 0.0))
        throw Error(ErrorCode::tilt_infeasible, "tilted weight <= 0; refine the grid", i);
      c.q[i * b + k] = qk;
    }
    const double f = 1.0 / (1.0 - c.lambda[i] * dt);
    for (int k = 0; k < b; ++k) c.beta[L.child(n, k).index] = c.beta[i] * f;
  }
  c.y0 = s.Y[L.root()];
  c.y0_prime = sp.Y[L.root()];
  double acc = 0.0;
  const double lo = std::exp(-g.lip_y() * L.grid().horizon);
  for (std::size_t p = 0; p < L.leaf_count(); ++p) {
    const NodeId l = L.leaf(p);
    auto path = L.path_to(l);
    double w = 1.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
      w *= c.q[path[k].index * b + L.child_slot(path[k + 1])];
    acc += w * c.beta[l.index] * (xi[p] - xi_prime[p]);
  }
  if (g.monotone_in_y())
    for (double bt : c.beta)
      if (bt < lo - 1e-12 || bt > 1.0 + 1e-12) c.beta_in_range = false;
  c.reconstructed = acc;
  c.reconstruction_error = std::abs((c.y0 - c.y0_prime) - acc);
  return c;
}

}  // namespace glab
