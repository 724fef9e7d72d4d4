#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "glab/error.hpp"
#include "glab/generator.hpp"
#include "glab/gexp.hpp"
#include "glab/process.hpp"

namespace glab {

/// Deterministic times t_0, ..., t_N.
inline std::vector<StoppingTime> grid_times(const LatticePtr& lat) {
  std::vector<StoppingTime> out;
  for (int k = 0; k <= lat->steps(); ++k) out.push_back(StoppingTime::deterministic(lat, slot_of(k, false)));
  return out;
}

/// Sorts J into pathwise order; throws invalid-family if two members cross.
inline std::vector<StoppingTime> ordered_family(std::vector<StoppingTime> j) {
  for (std::size_t i = 0; i < j.size(); ++i)
    for (std::size_t k = i + 1; k < j.size(); ++k)
      if (!precedes(j[i], j[k]) && !precedes(j[k], j[i]))
        throw Error(ErrorCode::invalid_family, "stopping times " + std::to_string(i) + " and " +
                                                   std::to_string(k) + " are not comparable");
  std::stable_sort(j.begin(), j.end(), [](const StoppingTime& a, const StoppingTime& b) {
    return precedes(a, b) && !precedes(b, a);
  });
  return j;
}

/// Completed b -> a down-crossings of X sampled along J, per leaf.
/// Thresholds are closed: armed at >= b, counted at <= a.
inline std::vector<int> count_downcrossings(const AdaptedProcess& x, const std::vector<StoppingTime>& j,
                                            double a, double b) {
  if (!(a < b)) throw Error(ErrorCode::invalid_parameter, "need a < b");
  const auto fam = ordered_family(j);
  const Lattice& L = *x.lattice();
  std::vector<int> out(L.leaf_count(), 0);
  for (std::size_t p = 0; p < L.leaf_count(); ++p) {
    const NodeId leaf = L.leaf(p);
    auto path = L.path_to(leaf);
    bool armed = false;
    for (const auto& t : fam) {
      const double v = x[path[depth_of_slot(t.slot_on_path(leaf))]];
      if (armed && v <= a) {
        ++out[p];
        armed = false;
      } else if (v >= b) {
        armed = true;
      }
    }
  }
  return out;
}

struct DownCrossingReport {
  double a = 0.0, b = 0.0, lip_y = 0.0, lip_z = 0.0;
  std::vector<int> counts;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool pass = true;
};

/// E^{-mu|z|}_{0,T}[D] against
/// e^{LT}/(b-a) E^{+mu|z|}_{0,T}[e^{LT}(X_0^b - a) - e^{-LT}(X_T^b - a)^+
///   + e^{LT}(X_T^b - a)^- + e^{LT} sum_k |g_{t_k}(a, 0)| dt],  X^b = X wedge b.
inline DownCrossingReport downcrossing_bound_check(const AdaptedProcess& x, const Generator& g, double a,
                                                   double b, const std::vector<StoppingTime>& j,
                                                   double tol = 1e-9) {
  if (!(a < b)) throw Error(ErrorCode::invalid_parameter, "need a < b");
  const LatticePtr& lat = x.lattice();
  const Lattice& L = *lat;
  auto pre = check_one_step(LadlagProcess::from_adapted(x), g, tol);
  if (!pre.ok())
    throw Error(ErrorCode::not_a_supermartingale, "process is not a g-supermartingale",
                pre.violations.front().node);
  DownCrossingReport r;
  r.a = a;
  r.b = b;
  r.lip_y = g.lip_y();
  r.lip_z = g.lip_z();
  r.counts = count_downcrossings(x, j, a, b);
  std::vector<double> d(r.counts.begin(), r.counts.end());
  r.lhs = g_expectation0(lat, gen::abs_z(-r.lip_z), d);

  const double e = std::exp(r.lip_y * L.grid().horizon);
  const double x0 = std::min(x[L.root()], b) - a;
  const std::vector<double> zero(L.dimension(), 0.0);
  std::vector<double> inner(L.leaf_count());
  for (std::size_t p = 0; p < L.leaf_count(); ++p) {
    const NodeId leaf = L.leaf(p);
    auto path = L.path_to(leaf);
    double drive = 0.0;
    for (int k = 0; k < L.steps(); ++k)
      drive += std::abs(g(GenPoint{k, L.grid().time(k), path[k].index}, a, zero)) * L.dt();
    const double xt = std::min(x[leaf], b) - a;
    inner[p] = e * x0 - std::max(xt, 0.0) / e + e * std::max(-xt, 0.0) + e * drive;
  }
  r.rhs = e / (b - a) * g_expectation0(lat, gen::abs_z(r.lip_z), inner);
  r.margin = r.rhs - r.lhs;
  r.pass = r.margin >= -tol;
  return r;
}

inline DownCrossingReport downcrossing_bound_check(const AdaptedProcess& x, const Generator& g, double a,
                                                   double b, double tol = 1e-9) {
  return downcrossing_bound_check(x, g, a, b, grid_times(x.lattice()), tol);
}

/// Same check on X - a with g(y + a, z) and barriers (0, b - a).
inline DownCrossingReport downcrossing_bound_check_shifted(const AdaptedProcess& x, const Generator& g,
                                                           double a, double b,
                                                           const std::vector<StoppingTime>& j,
                                                           double tol = 1e-9) {
  AdaptedProcess y = x;
  for (double& v : y.values()) v -= a;
  return downcrossing_bound_check(y, gen::shifted(g, a), 0.0, b - a, j, tol);
}

}  // namespace glab
