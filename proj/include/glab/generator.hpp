#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/constraint.hpp"
#include "glab/error.hpp"

namespace glab {

/// Where a driver is evaluated: step k (time t_k) at a node.
struct GenPoint {
  int step = 0;
  double t = 0.0;
  std::size_t node = 0;
};

namespace detail {
struct GeneratorBody {
  virtual ~GeneratorBody() = default;
  virtual double eval(const GenPoint& at, double y, std::span<const double> z) const = 0;
  virtual nlohmann::json describe() const = 0;
};
}  // namespace detail

/// Driver g_t(y, z) with Lipschitz constants lip_y (L) and lip_z (mu).
/// Cheap to copy; the body is shared and immutable.
class Generator {
 public:
  Generator(std::shared_ptr<const detail::GeneratorBody> body, double lip_y, double lip_z,
            bool monotone_in_y)
      : body_(std::move(body)), lip_y_(lip_y), lip_z_(lip_z), monotone_(monotone_in_y) {}

  double operator()(const GenPoint& at, double y, std::span<const double> z) const {
    return body_->eval(at, y, z);
  }
  double lip_y() const { return lip_y_; }
  double lip_z() const { return lip_z_; }
  /// y -> g(y, z) is non-increasing.
  bool monotone_in_y() const { return monotone_; }
  nlohmann::json to_json() const { return body_->describe(); }

 private:
  std::shared_ptr<const detail::GeneratorBody> body_;
  double lip_y_;
  double lip_z_;
  bool monotone_;
};

namespace gen {
namespace detail {

template <class F>
struct Lambda final : glab::detail::GeneratorBody {
  F f;
  nlohmann::json desc;
  Lambda(F fn, nlohmann::json d) : f(std::move(fn)), desc(std::move(d)) {}
  double eval(const GenPoint& at, double y, std::span<const double> z) const override {
    return f(at, y, z);
  }
  nlohmann::json describe() const override { return desc; }
};

template <class F>
Generator make(F f, nlohmann::json desc, double ly, double lz, bool mono) {
  return Generator(std::make_shared<const Lambda<F>>(std::move(f), std::move(desc)), ly, lz, mono);
}

inline double norm(std::span<const double> z) {
  double s = 0.0;
  for (double x : z) s += x * x;
  return std::sqrt(s);
}

}  // namespace detail

inline Generator zero() {
  return detail::make([](const GenPoint&, double, std::span<const double>) { return 0.0; },
                      {{"family", "zero"}}, 0.0, 0.0, true);
}

inline Generator constant(double c) {
  return detail::make([c](const GenPoint&, double, std::span<const double>) { return c; },
                      {{"family", "constant"}, {"c", c}}, 0.0, 0.0, true);
}

/// g = a*y + b.z; `b` must have one entry per driver component.
inline Generator linear(double a, std::vector<double> b) {
  const double bn = detail::norm(b);
  nlohmann::json desc = {{"family", "linear"}, {"a", a}, {"b", b}};
  return detail::make(
      [a, b = std::move(b)](const GenPoint&, double y, std::span<const double> z) {
        if (z.size() != b.size())
          throw Error(ErrorCode::invalid_parameter, "linear driver: b has " + std::to_string(b.size()) +
                                                        " components, z has " + std::to_string(z.size()));
        double s = a * y;
        for (std::size_t i = 0; i < z.size(); ++i) s += b[i] * z[i];
        return s;
      },
      std::move(desc), std::abs(a), bn, a <= 0.0);
}

/// g = -r*y.
inline Generator discount(double r) {
  return detail::make([r](const GenPoint&, double y, std::span<const double>) { return -r * y; },
                      {{"family", "discount"}, {"r", r}}, std::abs(r), 0.0, r >= 0.0);
}

/// g = m*|z| (m may be negative).
inline Generator abs_z(double m) {
  return detail::make(
      [m](const GenPoint&, double, std::span<const double> z) { return m * detail::norm(z); },
      {{"family", "abs_z"}, {"m", m}}, 0.0, std::abs(m), true);
}

/// g = base + n * dist(z, O).
inline Generator penalized(Generator base, ConstraintSet o, double n) {
  nlohmann::json desc = {{"family", "penalized"}, {"base", base.to_json()},
                         {"constraint", o.to_json()}, {"n", n}};
  const double ly = base.lip_y(), lz = base.lip_z() + std::abs(n);
  const bool mono = base.monotone_in_y();
  return detail::make(
      [base = std::move(base), o = std::move(o), n](const GenPoint& at, double y,
                                                    std::span<const double> z) {
        return base(at, y, z) + n * distance(o, z);
      },
      std::move(desc), ly, lz, mono);
}

/// Per-node affine driver a_n*y + b_n.z + c_n; `b` is interior_count * d.
inline Generator tabulated(std::vector<double> a, std::vector<double> b, std::vector<double> c) {
  if (a.size() != c.size() || a.empty() || b.size() % a.size() != 0)
    throw Error(ErrorCode::invalid_parameter, "tabulated driver needs matching per-node tables");
  const std::size_t d = b.size() / a.size();
  double ly = 0.0, lz = 0.0;
  bool mono = true;
  for (std::size_t n = 0; n < a.size(); ++n) {
    ly = std::max(ly, std::abs(a[n]));
    mono = mono && a[n] <= 0.0;
    lz = std::max(lz, detail::norm(std::span<const double>(b).subspan(n * d, d)));
  }
  nlohmann::json desc = {{"family", "tabulated"}, {"a", a}, {"b", b}, {"c", c}};
  return detail::make(
      [a = std::move(a), b = std::move(b), c = std::move(c), d](const GenPoint& at, double y,
                                                                std::span<const double> z) {
        if (at.node >= a.size()) throw Error(ErrorCode::invalid_parameter, "tabulated driver: node out of table");
        double s = a[at.node] * y + c[at.node];
        for (std::size_t i = 0; i < d && i < z.size(); ++i) s += b[at.node * d + i] * z[i];
        return s;
      },
      std::move(desc), ly, lz, mono);
}

/// g_bar(y, z) = g(y + a, z): the generator of X - a when X is driven by g.
inline Generator shifted(Generator base, double a) {
  nlohmann::json desc = {{"family", "shifted"}, {"base", base.to_json()}, {"shift", a}};
  const double ly = base.lip_y(), lz = base.lip_z();
  const bool mono = base.monotone_in_y();
  return detail::make(
      [base = std::move(base), a](const GenPoint& at, double y, std::span<const double> z) {
        return base(at, y + a, z);
      },
      std::move(desc), ly, lz, mono);
}

/// Discrete exponential change of numeraire with rho_k = (1 - L dt)^{-k}:
///   g~_k(y, z) = rho_{k+1} g_k(y / rho_k, z / rho_{k+1}) - L y / (1 - L dt).
/// X is an E^g-supermartingale iff rho X is an E^{g~}-supermartingale, step
/// for step, and g~ is non-increasing in y. As dt -> 0 this is
/// e^{Lt} g(y e^{-Lt}, z e^{-Lt}) - L y.
inline Generator exp_transformed(Generator base, double lip, double dt) {
  if (!(lip >= 0.0) || !(lip * dt < 1.0))
    throw Error(ErrorCode::step_too_coarse, "exponential transform needs L*dt < 1");
  nlohmann::json desc = {{"family", "exp_transformed"}, {"base", base.to_json()}, {"L", lip}, {"dt", dt}};
  const double shrink = 1.0 - lip * dt;
  const double ly = lip == 0.0 ? base.lip_y() : 2.0 * lip / shrink;
  const double lz = base.lip_z();
  return detail::make(
      [base = std::move(base), lip, shrink](const GenPoint& at, double y, std::span<const double> z) {
        if (lip == 0.0) return base(at, y, z);
        const double rho = std::pow(shrink, -at.step);
        const double rho_next = rho / shrink;
        std::vector<double> zs(z.begin(), z.end());
        for (double& v : zs) v /= rho_next;
        return rho_next * base(at, y / rho, zs) - lip * y / shrink;
      },
      std::move(desc), ly, lz, lip == 0.0 ? base.monotone_in_y() : true);
}

/// Discrete numeraire of exp_transformed at step k.
inline double exp_weight(double lip, double dt, int step) {
  return lip == 0.0 ? 1.0 : std::pow(1.0 - lip * dt, -step);
}

/// Catalog entry from {"family": ..., params...}.
inline Generator from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family"))
    throw Error(ErrorCode::invalid_parameter, "generator needs a 'family'");
  const std::string f = j.at("family").get<std::string>();
  if (f == "zero") return zero();
  if (f == "constant") return constant(j.at("c").get<double>());
  if (f == "discount") return discount(j.at("r").get<double>());
  if (f == "abs_z") return abs_z(j.at("m").get<double>());
  if (f == "linear") {
    std::vector<double> b;
    if (j.at("b").is_array()) b = j.at("b").get<std::vector<double>>();
    else b = {j.at("b").get<double>()};
    return linear(j.at("a").get<double>(), std::move(b));
  }
  if (f == "penalized")
    return penalized(from_json(j.at("base")), ConstraintSet::from_json(j.at("constraint")),
                     j.at("n").get<double>());
  if (f == "tabulated")
    return tabulated(j.at("a").get<std::vector<double>>(), j.at("b").get<std::vector<double>>(),
                     j.at("c").get<std::vector<double>>());
  if (f == "shifted") return shifted(from_json(j.at("base")), j.at("shift").get<double>());
  throw Error(ErrorCode::invalid_parameter, "unknown generator family '" + f + "'");
}

}  // namespace gen
}  // namespace glab
