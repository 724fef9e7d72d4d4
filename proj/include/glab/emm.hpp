#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "glab/decomp.hpp"
#include "glab/error.hpp"
#include "glab/generator.hpp"
#include "glab/gexp.hpp"
#include "glab/lattice.hpp"
#include "glab/process.hpp"

namespace glab {

/// M = int alpha^T dW on the lattice; alpha is a d x d matrix per interior
/// node (row-major), dM = alpha^T dW per edge.
class MartingaleDriver {
 public:
  MartingaleDriver(LatticePtr lat, std::vector<double> alpha, double bound)
      : lat_(std::move(lat)), alpha_(std::move(alpha)), bound_(bound) {
    const Lattice& L = *lat_;
    const int d = L.dimension(), b = L.branching();
    if (alpha_.size() != L.interior_count() * d * d)
      throw Error(ErrorCode::invalid_parameter, "alpha needs one d x d matrix per interior node");
    dm_.assign(L.interior_count() * b * d, 0.0);
    for (std::size_t i = 0; i < L.interior_count(); ++i) {
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
          alpha_.data() + i * d * d, d, d);
      const double na = a.norm();
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (!lu.isInvertible()) throw Error(ErrorCode::invalid_parameter, "alpha not invertible", i);
      const double ni = lu.inverse().norm();
      if (na > bound_ + 1e-12 || ni > bound_ + 1e-12)
        throw Error(ErrorCode::invalid_parameter, "alpha or its inverse exceeds the declared bound", i);
      auto e = L.edges(L.node_at(i));
      for (int c = 0; c < b; ++c) {
        Eigen::Map<const Eigen::VectorXd> dw(e.increments.data() + c * d, d);
        Eigen::VectorXd m = a.transpose() * dw;
        for (int k = 0; k < d; ++k) dm_[(i * b + c) * d + k] = m[k];
      }
    }
  }

  /// alpha = identity at every node.
  static MartingaleDriver identity(LatticePtr lat) {
    const int d = lat->dimension();
    std::vector<double> a(lat->interior_count() * d * d, 0.0);
    for (std::size_t i = 0; i < lat->interior_count(); ++i)
      for (int k = 0; k < d; ++k) a[i * d * d + k * d + k] = 1.0;
    return MartingaleDriver(lat, std::move(a), std::sqrt(static_cast<double>(d)));
  }

  const LatticePtr& lattice() const { return lat_; }
  double bound() const { return bound_; }
  std::span<const double> increments(const NodeId& n) const {
    const std::size_t w = lat_->branching() * lat_->dimension();
    return std::span<const double>(dm_).subspan(n.index * w, w);
  }

 private:
  LatticePtr lat_;
  std::vector<double> alpha_;
  double bound_;
  std::vector<double> dm_;
};

/// Finite family of martingale measures given by per-edge probabilities.
struct EmmFamily {
  std::vector<double> params;
  std::vector<std::vector<double>> q;  // per measure: interior * branching
  double max_martingale_error = 0.0;
};

inline constexpr double kEmmEps = 0.01;

/// q = (q_up, 1 - 2 q_up, q_up) at every node of a trinomial lattice.
inline EmmFamily build_emm_family(const MartingaleDriver& m, const std::vector<double>& q_up,
                                  double eps = kEmmEps) {
  const Lattice& L = *m.lattice();
  if (L.branching() != 3 || L.dimension() != 1)
    throw Error(ErrorCode::invalid_parameter, "EMM family needs a one-dimensional trinomial lattice");
  EmmFamily f;
  for (double qu : q_up) {
    if (!(qu > eps && qu < 0.5 - eps))
      throw Error(ErrorCode::invalid_measure, "q_up = " + std::to_string(qu) + " outside (eps, 1/2 - eps)");
    std::vector<double> q(L.interior_count() * 3);
    for (std::size_t i = 0; i < L.interior_count(); ++i) {
      q[i * 3] = qu;
      q[i * 3 + 1] = 1.0 - 2.0 * qu;
      q[i * 3 + 2] = qu;
      auto dm = m.increments(L.node_at(i));
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += q[i * 3 + c] * dm[c];
      f.max_martingale_error = std::max(f.max_martingale_error, std::abs(s));
      if (std::abs(s) > 1e-12)
        throw Error(ErrorCode::invalid_measure, "M is not a martingale under q_up = " + std::to_string(qu), i);
    }
    f.params.push_back(qu);
    f.q.push_back(std::move(q));
  }
  return f;
}

struct QReport {
  double q_up = 0.0;
  SupermartingaleReport report;
};

namespace detail {
inline double q_one_step(const Lattice& L, const NodeId& n, std::span<const double> q,
                         std::span<const double> dm, std::span<const double> child, const Generator& g,
                         std::vector<double>* z_out, const SolverOptions& opt) {
  Regression r = regress(q, dm, L.dimension(), child);
  const GenPoint at{n.depth, L.grid().time(n.depth), n.index};
  const std::span<const double> z(r.z);
  if (z_out) *z_out = r.z;
  return implicit_step(r.mean, L.dt(), [&](double y) { return g(at, y, z); }, opt, n.index).y;
}
}  // namespace detail

/// One-step doubled-grid check under each Q with the M-driven BSDE.
inline std::vector<QReport> check_q_supermartingale(const LadlagProcess& x, const Generator& g,
                                                    const MartingaleDriver& m, const EmmFamily& fam,
                                                    double tol = 1e-9, const SolverOptions& opt = {}) {
  const Lattice& L = *x.lattice();
  check_step(g, L.dt());
  const int b = L.branching();
  std::vector<QReport> out;
  std::vector<double> child(b);
  for (std::size_t f = 0; f < fam.q.size(); ++f) {
    QReport qr{fam.params[f], {}};
    for (std::size_t i = 0; i < L.interior_count(); ++i) {
      const NodeId n = L.node_at(i);
      auto& rep = qr.report;
      rep.worst_margin = std::min(rep.worst_margin, x.right_jump(n));
      if (x.right_jump(n) < -tol)
        rep.violations.push_back({Violation::Kind::right_jump, f, i, slot_of(n.depth, false), x.value(n), x.right_value(n)});
      for (int c = 0; c < b; ++c) child[c] = x.value(L.child(n, c));
      const double e = detail::q_one_step(L, n, std::span<const double>(fam.q[f]).subspan(i * b, b),
                                          m.increments(n), child, g, nullptr, opt);
      rep.worst_margin = std::min(rep.worst_margin, x.right_value(n) - e);
      if (x.right_value(n) < e - tol)
        rep.violations.push_back({Violation::Kind::right_value, f, i, slot_of(n.depth, true), x.right_value(n), e});
      ++rep.pairs_checked;
    }
    out.push_back(std::move(qr));
  }
  return out;
}

struct OptionalDecomposition {
  std::vector<double> Z;        // interior * d, regression under the reference measure
  std::vector<double> dC;       // per edge: x_{k+1} - x_k + g(x_k+, Z) dt - Z.dM
  double max_dC = -std::numeric_limits<double>::infinity();
  std::size_t dC_witness = 0;   // edge index
  double z_agreement = 0.0;     // max_Q |Z^Q - Z|
  std::size_t z_witness = 0;    // node index
  bool aggregated = true;
  bool non_increasing = true;
  MertensCorrection correction;
};

inline OptionalDecomposition optional_decompose(const LadlagProcess& x, const Generator& g,
                                                const MartingaleDriver& m, const EmmFamily& fam,
                                                double tol = 1e-9, double agree_tol = 1e-8,
                                                const SolverOptions& opt = {}) {
  const Lattice& L = *x.lattice();
  const int d = L.dimension(), b = L.branching();
  for (const auto& qr : check_q_supermartingale(x, g, m, fam, tol, opt))
    if (!qr.report.ok())
      throw Error(ErrorCode::not_a_supermartingale,
                  "not a supermartingale under q_up = " + std::to_string(qr.q_up),
                  qr.report.violations.front().node);
  OptionalDecomposition out;
  out.correction = mertens_correct(x, g, MertensMode::weighted, tol);
  const AdaptedProcess& xbar = out.correction.Xbar;
  out.Z.assign(L.interior_count() * d, 0.0);
  out.dC.assign(L.interior_count() * b, 0.0);
  std::vector<double> child(b), zq;
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    for (int c = 0; c < b; ++c) child[c] = xbar[L.child(n, c)];
    auto dm = m.increments(n);
    auto e = L.edges(n);
    Regression ref = regress(e.probs, dm, d, child);
    std::copy(ref.z.begin(), ref.z.end(), out.Z.begin() + i * d);
    for (const auto& q : fam.q) {
      Regression rq = regress(std::span<const double>(q).subspan(i * b, b), dm, d, child);
      for (int a = 0; a < d; ++a) {
        const double diff = std::abs(rq.z[a] - ref.z[a]);
        if (diff > out.z_agreement) {
          out.z_agreement = diff;
          out.z_witness = i;
        }
      }
    }
    const GenPoint at{n.depth, L.grid().time(n.depth), i};
    const double drive = g(at, x.right_value(n), ref.z) * L.dt();
    for (int c = 0; c < b; ++c) {
      double v = x.value(L.child(n, c)) - x.value(n) + drive;
      for (int a = 0; a < d; ++a) v -= ref.z[a] * dm[c * d + a];
      out.dC[i * b + c] = v;
      if (v > out.max_dC) {
        out.max_dC = v;
        out.dC_witness = i * b + c;
      }
    }
  }
  out.aggregated = out.z_agreement <= agree_tol;
  out.non_increasing = out.max_dC <= tol;
  return out;
}

/// {"q_up": [...]} (fractions like "1/6" accepted as strings).
inline std::vector<double> q_up_from_json(const nlohmann::json& j) {
  std::vector<double> out;
  for (const auto& e : j.at("q_up")) {
    if (e.is_number()) {
      out.push_back(e.get<double>());
    } else {
      const std::string s = e.get<std::string>();
      const auto slash = s.find('/');
      if (slash == std::string::npos) out.push_back(std::stod(s));
      else out.push_back(std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1)));
    }
  }
  return out;
}

}  // namespace glab
