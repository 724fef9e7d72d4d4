#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/error.hpp"

namespace glab {

/// Closed convex set O in R^d with closed-form support function, distance
/// and projection. Intervals are the d = 1 case of boxes.
class ConstraintSet {
 public:
  struct Box {
    std::vector<double> lo, hi;
  };
  struct Ball {
    std::vector<double> center;
    double radius = 0.0;
  };

  static ConstraintSet interval(double l, double u) { return box({l}, {u}); }

  static ConstraintSet box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size() || lo.empty())
      throw Error(ErrorCode::invalid_parameter, "box bounds must have equal, positive length");
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i])
        throw Error(ErrorCode::invalid_parameter, "box needs finite l <= u");
    }
    ConstraintSet s;
    s.shape_ = Box{std::move(lo), std::move(hi)};
    return s;
  }

  static ConstraintSet ball(std::vector<double> center, double radius) {
    if (center.empty() || !(radius >= 0.0) || !std::isfinite(radius))
      throw Error(ErrorCode::invalid_parameter, "ball needs a centre and finite R >= 0");
    ConstraintSet s;
    s.shape_ = Ball{std::move(center), radius};
    return s;
  }

  std::size_t dimension() const {
    return std::visit([](const auto& s) -> std::size_t {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, Box>) return s.lo.size();
      else return s.center.size();
    }, shape_);
  }

  const std::variant<Box, Ball>& shape() const { return shape_; }

  nlohmann::json to_json() const {
    if (const auto* b = std::get_if<Box>(&shape_)) {
      if (b->lo.size() == 1) return {{"kind", "interval"}, {"l", b->lo[0]}, {"u", b->hi[0]}};
      return {{"kind", "box"}, {"l", b->lo}, {"u", b->hi}};
    }
    const auto& c = std::get<Ball>(shape_);
    return {{"kind", "ball"}, {"center", c.center}, {"radius", c.radius}};
  }

  static ConstraintSet from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "interval") return interval(j.at("l").get<double>(), j.at("u").get<double>());
    if (kind == "box") return box(j.at("l").get<std::vector<double>>(), j.at("u").get<std::vector<double>>());
    if (kind == "ball") return ball(j.at("center").get<std::vector<double>>(), j.at("radius").get<double>());
    throw Error(ErrorCode::invalid_parameter, "unknown constraint kind '" + kind + "'");
  }

 private:
  ConstraintSet() = default;
  std::variant<Box, Ball> shape_;
};

namespace detail {
inline void check_dim(const ConstraintSet& o, std::span<const double> v) {
  if (v.size() != o.dimension())
    throw Error(ErrorCode::invalid_parameter, "vector dimension does not match constraint set");
}
inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}
}  // namespace detail

/// delta_O(u) = sup{u.z : z in O}.
inline double support(const ConstraintSet& o, std::span<const double> u) {
  detail::check_dim(o, u);
  if (const auto* b = std::get_if<ConstraintSet::Box>(&o.shape())) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      s += std::max(u[i], 0.0) * b->hi[i] - std::max(-u[i], 0.0) * b->lo[i];
    return s;
  }
  const auto& c = std::get<ConstraintSet::Ball>(o.shape());
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * c.center[i];
  return dot + c.radius * detail::norm(u);
}

/// Euclidean projection onto O.
inline std::vector<double> project(const ConstraintSet& o, std::span<const double> z) {
  detail::check_dim(o, z);
  std::vector<double> out(z.begin(), z.end());
  if (const auto* b = std::get_if<ConstraintSet::Box>(&o.shape())) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], b->lo[i], b->hi[i]);
    return out;
  }
  const auto& c = std::get<ConstraintSet::Ball>(o.shape());
  std::vector<double> diff(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) diff[i] = z[i] - c.center[i];
  const double r = detail::norm(diff);
  if (r <= c.radius) return out;
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = c.center[i] + diff[i] * (c.radius / r);
  return out;
}

inline double distance(const ConstraintSet& o, std::span<const double> z) {
  detail::check_dim(o, z);
  if (const auto* b = std::get_if<ConstraintSet::Box>(&o.shape())) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double e = std::max({b->lo[i] - z[i], 0.0, z[i] - b->hi[i]});
      s += e * e;
    }
    return std::sqrt(s);
  }
  const auto& c = std::get<ConstraintSet::Ball>(o.shape());
  std::vector<double> diff(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) diff[i] = z[i] - c.center[i];
  return std::max(detail::norm(diff) - c.radius, 0.0);
}

}  // namespace glab
