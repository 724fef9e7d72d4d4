#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/constraint.hpp"
#include "glab/error.hpp"
#include "glab/generator.hpp"
#include "glab/gexp.hpp"
#include "glab/lattice.hpp"

namespace glab {

/// Finite set of controls v with finite support value; `bound` is
/// max |v| + |delta(v)|.
struct ControlGrid {
  std::vector<std::vector<double>> controls;
  double bound = 0.0;
};

inline ControlGrid make_control_grid(std::vector<std::vector<double>> v, const ConstraintSet& o) {
  if (v.empty()) throw Error(ErrorCode::invalid_parameter, "empty control grid");
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  ControlGrid g{std::move(v), 0.0};
  for (const auto& c : g.controls)
    g.bound = std::max(g.bound, detail::norm(c) + std::abs(support(o, c)));
  return g;
}

/// Uniform grid on [lo, hi]^d (product over components).
inline ControlGrid uniform_controls(double lo, double hi, int points, const ConstraintSet& o) {
  if (points < 1 || !(lo <= hi)) throw Error(ErrorCode::invalid_parameter, "bad control grid");
  const int d = static_cast<int>(o.dimension());
  std::vector<double> axis(points);
  for (int i = 0; i < points; ++i) axis[i] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
  std::vector<std::vector<double>> v;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= points;
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<double> x(d);
    std::size_t rem = c;
    for (int a = d - 1; a >= 0; --a) {
      x[a] = axis[rem % points];
      rem /= points;
    }
    v.push_back(std::move(x));
  }
  return make_control_grid(std::move(v), o);
}

/// {"grid": "uniform", "lo", "hi", "points"} or {"grid": "list", "values": [[...], ...]}.
inline ControlGrid controls_from_json(const nlohmann::json& j, const ConstraintSet& o) {
  const std::string kind = j.value("grid", "uniform");
  if (kind == "uniform")
    return uniform_controls(j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("points").get<int>(), o);
  if (kind == "list") {
    std::vector<std::vector<double>> v;
    for (const auto& e : j.at("values")) {
      if (e.is_number()) v.push_back({e.get<double>()});
      else v.push_back(e.get<std::vector<double>>());
    }
    return make_control_grid(std::move(v), o);
  }
  throw Error(ErrorCode::invalid_parameter, "unknown control grid '" + kind + "'");
}

// ---------------------------------------------------------------------------

struct PenalizedSolution {
  double n = 0.0;
  BSDESolution sol;
  std::vector<double> dA;  // interior: n dist(O, Z_k) dt
};

inline PenalizedSolution solve_penalized(const LatticePtr& lat, const Generator& g, const ConstraintSet& o,
                                         std::span<const double> xi, double n,
                                         const SolverOptions& opt = {}) {
  if (o.dimension() != static_cast<std::size_t>(lat->dimension()))
    throw Error(ErrorCode::invalid_parameter, "constraint dimension does not match the lattice");
  if (!(n >= 0.0)) throw Error(ErrorCode::invalid_parameter, "penalty must be >= 0");
  PenalizedSolution out{n, solve_bsde(lat, gen::penalized(g, o, n), xi, opt), {}};
  out.dA.assign(lat->interior_count(), 0.0);
  for (std::size_t i = 0; i < lat->interior_count(); ++i)
    out.dA[i] = n * distance(o, out.sol.z(lat->node_at(i))) * lat->dt();
  return out;
}

struct DualSolution {
  AdaptedProcess S;
  std::vector<std::size_t> argmax;   // interior: index into `controls`
  std::vector<double> Z;             // interior * d, z(v*) at the argmax
  std::vector<std::vector<double>> controls;   // feasible controls, lexicographic
  std::vector<std::vector<double>> rejected;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool tilt_feasible(const Lattice& L, std::span<const double> v) {
  const int d = L.dimension();
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    auto e = L.edges(L.node_at(i));
    for (int c = 0; c < L.branching(); ++c) {
      double s = 1.0;
      for (int a = 0; a < d; ++a) s += v[a] * e.increments[c * d + a];
      if (!(s > 0.0)) return false;
    }
  }
  return true;
}

/// One control at one node: tilt, regress against dW - v dt under q, solve
/// y = E^q[S'] + (g(y, z) - delta(v)) dt.
struct DualStep {
  double y = 0.0;
  std::vector<double> z;
};

inline DualStep dual_step(const Lattice& L, const NodeId& n, const Generator& g, double delta,
                          std::span<const double> v, std::span<const double> child,
                          const SolverOptions& opt) {
  const int d = L.dimension(), b = L.branching();
  const double dt = L.dt();
  auto e = L.edges(n);
  std::vector<double> q(b), inc(b * d);
  for (int c = 0; c < b; ++c) {
    double s = 1.0;
    for (int a = 0; a < d; ++a) {
      s += v[a] * e.increments[c * d + a];
      inc[c * d + a] = e.increments[c * d + a] - v[a] * dt;
    }
    q[c] = e.probs[c] * s;
  }
  Regression r = regress(q, inc, d, child);
  const GenPoint at{n.depth, L.grid().time(n.depth), n.index};
  const std::span<const double> z(r.z);
  StepResult st = implicit_step(r.mean, dt, [&](double y) { return g(at, y, z) - delta; }, opt, n.index);
  return {st.y, std::move(r.z)};
}

}  // namespace detail

inline DualSolution solve_dual(const LatticePtr& lat, const Generator& g, const ConstraintSet& o,
                               std::span<const double> xi, const ControlGrid& grid,
                               const SolverOptions& opt = {}) {
  const Lattice& L = *lat;
  const int d = L.dimension(), b = L.branching();
  check_step(g, L.dt());
  if (xi.size() != L.leaf_count()) throw Error(ErrorCode::invalid_parameter, "need one terminal value per leaf");
  DualSolution out{AdaptedProcess(lat, kNaN), std::vector<std::size_t>(L.interior_count(), 0),
                   std::vector<double>(L.interior_count() * d, 0.0), {}, {}, {}};
  for (const auto& v : grid.controls) {
    if (v.size() != static_cast<std::size_t>(d))
      throw Error(ErrorCode::invalid_parameter, "control dimension does not match the lattice");
    if (detail::tilt_feasible(L, v)) {
      out.controls.push_back(v);
    } else {
      out.rejected.push_back(v);
      std::string s = "control (";
      for (int a = 0; a < d; ++a) s += (a ? ", " : "") + std::to_string(v[a]);
      out.warnings.push_back(s + ") rejected: 1 + v.dW <= 0 on some edge");
    }
  }
  if (out.controls.empty()) throw Error(ErrorCode::no_feasible_control, "no control passes the tilt check");
  std::vector<double> delta;
  for (const auto& v : out.controls) delta.push_back(support(o, v));

  for (std::size_t p = 0; p < L.leaf_count(); ++p) out.S[L.leaf(p)] = xi[p];
  std::vector<double> child(b);
  for (std::size_t i = L.interior_count(); i-- > 0;) {
    const NodeId n = L.node_at(i);
    for (int c = 0; c < b; ++c) child[c] = out.S[L.child(n, c)];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < out.controls.size(); ++k) {
      detail::DualStep st = detail::dual_step(L, n, g, delta[k], out.controls[k], child, opt);
      if (st.y > best) {  // controls are sorted, so ties keep the smallest
        best = st.y;
        out.argmax[i] = k;
        std::copy(st.z.begin(), st.z.end(), out.Z.begin() + i * d);
      }
    }
    out.S[n] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------

struct ViolationReport {
  double margin = -std::numeric_limits<double>::infinity();
  std::size_t node = 0;
  std::vector<double> direction;
};

/// Unit directions: {-1, +1} for d = 1, `m` points on the circle for d = 2,
/// +-e_i plus all sign vectors for d >= 3.
inline std::vector<std::vector<double>> sphere_grid(int d, int m) {
  if (m < 2) throw Error(ErrorCode::invalid_parameter, "sphere grid size must be >= 2");
  std::vector<std::vector<double>> u;
  if (d == 1) return {{-1.0}, {1.0}};
  if (d == 2) {
    for (int i = 0; i < m; ++i) {
      const double th = 2.0 * std::numbers::pi * i / m;
      u.push_back({std::cos(th), std::sin(th)});
    }
    return u;
  }
  for (int a = 0; a < d; ++a)
    for (double s : {-1.0, 1.0}) {
      std::vector<double> e(d, 0.0);
      e[a] = s;
      u.push_back(std::move(e));
    }
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    std::vector<double> e(d);
    for (int a = 0; a < d; ++a) e[a] = (mask >> a & 1) ? inv : -inv;
    u.push_back(std::move(e));
  }
  return u;
}

/// max over nodes and directions of u.Z - delta(u); Z is node-major with
/// `d` components (NaN rows skipped).
inline ViolationReport violation_detect(std::span<const double> z, int d, const ConstraintSet& o,
                                        int sphere_grid_size = 16) {
  ViolationReport r;
  const auto dirs = sphere_grid(d, sphere_grid_size);
  const std::size_t nodes = z.size() / d;
  for (std::size_t i = 0; i < nodes; ++i) {
    auto zi = z.subspan(i * d, d);
    if (std::isnan(zi[0])) continue;
    for (const auto& u : dirs) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += u[a] * zi[a];
      s -= support(o, u);
      if (s > r.margin) r = {s, i, u};
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

struct DualReport {
  std::vector<double> penalties;
  std::vector<double> primal;         // Y^n_0
  std::vector<double> violation;      // violation_detect margin of Z^n
  double unconstrained_violation = 0.0;
  double dual = 0.0;                  // S_0
  double gap = 0.0;                   // min_n Y^n_0 - S_0
  bool weak_duality = true;
  double weak_duality_slack = 0.0;    // min_n (Y^n_0 - S_0)
  bool primal_monotone = true;
  bool primal_unbounded = false;
  double e_nu = 0.0;                  // E[sum (v*.Z - delta(v*)) dt] under the reference measure
  std::vector<double> root_control;
  std::size_t controls_used = 0;
  std::vector<std::string> warnings;
};

struct DualityOptions {
  double weak_tol = 1e-9;
  double monotone_tol = 1e-12;
  double ceiling = 1e6;
  int sphere_grid_size = 16;
};

inline DualReport duality_gap(const LatticePtr& lat, const Generator& g, const ConstraintSet& o,
                              std::span<const double> xi, std::vector<double> penalties,
                              const ControlGrid& grid, const DualityOptions& dopt = {},
                              const SolverOptions& opt = {}) {
  const Lattice& L = *lat;
  const int d = L.dimension();
  if (penalties.empty()) throw Error(ErrorCode::invalid_parameter, "need at least one penalty level");
  std::sort(penalties.begin(), penalties.end());
  DualReport r;
  r.penalties = penalties;
  BSDESolution plain = solve_bsde(lat, g, xi, opt);
  r.unconstrained_violation = violation_detect(plain.Z, d, o, dopt.sphere_grid_size).margin;
  std::vector<double> last_z;
  for (double n : penalties) {
    PenalizedSolution ps = solve_penalized(lat, g, o, xi, n, opt);
    const double y0 = ps.sol.Y[L.root()];
    if (!r.primal.empty() && y0 < r.primal.back() - dopt.monotone_tol * std::max(1.0, std::abs(y0)))
      r.primal_monotone = false;
    r.primal.push_back(y0);
    r.violation.push_back(violation_detect(ps.sol.Z, d, o, dopt.sphere_grid_size).margin);
    if (!(std::abs(y0) <= dopt.ceiling)) r.primal_unbounded = true;
    last_z = ps.sol.Z;
  }
  DualSolution ds = solve_dual(lat, g, o, xi, grid, opt);
  r.warnings = ds.warnings;
  r.controls_used = ds.controls.size();
  r.dual = ds.S[L.root()];
  r.root_control = ds.controls[ds.argmax[0]];
  double best = std::numeric_limits<double>::infinity();
  for (double y : r.primal) best = std::min(best, y);
  r.gap = best - r.dual;
  r.weak_duality_slack = r.gap;
  r.weak_duality = r.dual <= best + dopt.weak_tol;
  // e(nu) per path with Z from the highest penalty level.
  for (const auto& pw : enumerate_paths(L)) {
    auto path = L.path_to(pw.leaf);
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const auto& v = ds.controls[ds.argmax[path[k].index]];
      double dot = 0.0;
      for (int a = 0; a < d; ++a) dot += v[a] * last_z[path[k].index * d + a];
      s += (dot - support(o, v)) * L.dt();
    }
    r.e_nu += pw.probability * s;
  }
  return r;
}

}  // namespace glab
