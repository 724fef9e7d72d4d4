#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/error.hpp"
#include "glab/lattice.hpp"

namespace glab::payoff {

// All payoffs read the first driver component along the path to each leaf.

inline std::vector<double> terminal_W(const Lattice& lat) {
  std::vector<double> out(lat.leaf_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = lat.w(lat.leaf(p))[0];
  return out;
}

inline std::vector<double> abs_W(const Lattice& lat) {
  auto v = terminal_W(lat);
  for (double& x : v) x = std::abs(x);
  return v;
}

inline std::vector<double> call(const Lattice& lat, double strike) {
  auto v = terminal_W(lat);
  for (double& x : v) x = std::max(x - strike, 0.0);
  return v;
}

inline std::vector<double> indicator_above(const Lattice& lat, double level) {
  auto v = terminal_W(lat);
  for (double& x : v) x = x >= level ? 1.0 : 0.0;
  return v;
}

inline std::vector<double> running_max(const Lattice& lat) {
  std::vector<double> out(lat.leaf_count());
  for (std::size_t p = 0; p < out.size(); ++p) {
    double m = 0.0;
    for (const NodeId& n : lat.path_to(lat.leaf(p))) m = std::max(m, lat.w(n)[0]);
    out[p] = m;
  }
  return out;
}

/// "terminal_W" or {"payoff": "call", "strike": K}, {"payoff": "indicator_above", "level": a}, ...
inline std::vector<double> from_json(const Lattice& lat, const nlohmann::json& j) {
  std::string name;
  nlohmann::json args = nlohmann::json::object();
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object() && j.contains("payoff")) {
    name = j.at("payoff").get<std::string>();
    args = j;
  } else {
    throw Error(ErrorCode::invalid_parameter, "payoff must be a name or {\"payoff\": ...}");
  }
  if (name == "terminal_W") return terminal_W(lat);
  if (name == "abs_W") return abs_W(lat);
  if (name == "call") return call(lat, args.value("strike", 0.0));
  if (name == "indicator_above") return indicator_above(lat, args.value("level", 0.0));
  if (name == "running_max") return running_max(lat);
  throw Error(ErrorCode::invalid_parameter, "unknown payoff '" + name + "'");
}

}  // namespace glab::payoff
