#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/error.hpp"

namespace glab {

/// Uniform grid 0 = t_0 < ... < t_N = T.
struct TimeGrid {
  int steps = 1;
  double horizon = 1.0;

  double dt() const { return horizon / steps; }
  double time(int k) const { return k == steps ? horizon : k * dt(); }
};

/// Addresses one node of the tree. `index` is global (breadth-first over
/// depths); `pos` is the position inside its depth, whose base-b digits
/// spell the path from the root.
struct NodeId {
  int depth = 0;
  std::size_t pos = 0;
  std::size_t index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

enum class LatticeKind { binomial, trinomial, product };

inline const char* to_string(LatticeKind k) {
  switch (k) {
    case LatticeKind::binomial: return "binomial";
    case LatticeKind::trinomial: return "trinomial";
    case LatticeKind::product: return "product";
  }
  return "unknown";
}

/// Finite non-recombining event tree carrying the increments of a discrete
/// d-dimensional driver W and reference transition probabilities. Node
/// identity encodes the whole history, so sigma(node at depth k) = F_{t_k}.
/// Immutable after construction.
class Lattice {
 public:
  struct Edges {
    std::span<const double> probs;       // branching
    std::span<const double> increments;  // branching * dimension, row-major
  };

  Lattice(LatticeKind kind, TimeGrid grid, int dimension, int branching,
          std::vector<double> edge_probs, std::vector<double> edge_increments)
      : kind_(kind), grid_(grid), dim_(dimension), branching_(branching) {
    if (grid.steps < 1 || !(grid.horizon > 0.0) || dimension < 1 || branching < 2)
      throw Error(ErrorCode::invalid_parameter, "lattice needs N >= 1, T > 0, d >= 1, b >= 2");
    offsets_.resize(grid.steps + 2);
    offsets_[0] = 0;
    std::size_t width = 1;
    for (int k = 0; k <= grid.steps; ++k) {
      offsets_[k + 1] = offsets_[k] + width;
      width *= static_cast<std::size_t>(branching);
    }
    const std::size_t interior = interior_count();
    if (edge_probs.size() == static_cast<std::size_t>(branching)) {
      // Homogeneous template: replicate across interior nodes.
      probs_.reserve(interior * branching);
      incs_.reserve(interior * branching * dimension);
      for (std::size_t n = 0; n < interior; ++n) {
        probs_.insert(probs_.end(), edge_probs.begin(), edge_probs.end());
        incs_.insert(incs_.end(), edge_increments.begin(), edge_increments.end());
      }
    } else {
      probs_ = std::move(edge_probs);
      incs_ = std::move(edge_increments);
    }
    if (probs_.size() != interior * branching ||
        incs_.size() != interior * branching * dimension)
      throw Error(ErrorCode::invalid_parameter, "edge data size mismatch");
    compute_paths();
  }

  LatticeKind kind() const { return kind_; }
  const TimeGrid& grid() const { return grid_; }
  int steps() const { return grid_.steps; }
  double dt() const { return grid_.dt(); }
  int dimension() const { return dim_; }
  int branching() const { return branching_; }

  std::size_t node_count() const { return offsets_.back(); }
  std::size_t interior_count() const { return offsets_[grid_.steps]; }
  std::size_t width(int depth) const { return offsets_[depth + 1] - offsets_[depth]; }
  std::size_t leaf_count() const { return width(grid_.steps); }
  std::size_t offset(int depth) const { return offsets_[depth]; }

  NodeId root() const { return {0, 0, 0}; }
  NodeId node(int depth, std::size_t pos) const { return {depth, pos, offsets_[depth] + pos}; }
  NodeId node_at(std::size_t index) const {
    int d = depth_of(index);
    return {d, index - offsets_[d], index};
  }
  int depth_of(std::size_t index) const {
    int d = 0;
    while (offsets_[d + 1] <= index) ++d;
    return d;
  }
  NodeId leaf(std::size_t pos) const { return node(grid_.steps, pos); }
  bool is_leaf(const NodeId& n) const { return n.depth == grid_.steps; }

  NodeId child(const NodeId& n, int i) const {
    return node(n.depth + 1, n.pos * branching_ + static_cast<std::size_t>(i));
  }
  NodeId parent(const NodeId& n) const { return node(n.depth - 1, n.pos / branching_); }
  /// Index of `n` among its parent's children.
  int child_slot(const NodeId& n) const { return static_cast<int>(n.pos % branching_); }

  /// Global edge index of (n, i): n.index * branching + i. Only interior nodes.
  std::size_t edge(const NodeId& n, int i) const {
    return n.index * branching_ + static_cast<std::size_t>(i);
  }

  Edges edges(const NodeId& n) const {
    const std::size_t b = branching_;
    return {std::span<const double>(probs_).subspan(n.index * b, b),
            std::span<const double>(incs_).subspan(n.index * b * dim_, b * dim_)};
  }
  std::span<const double> increment(const NodeId& n, int i) const {
    return std::span<const double>(incs_).subspan((n.index * branching_ + i) * dim_, dim_);
  }
  double prob(const NodeId& n, int i) const { return probs_[n.index * branching_ + i]; }

  /// Driver value W_{t_k} at a node (cumulative increments from the root).
  std::span<const double> w(const NodeId& n) const {
    return std::span<const double>(w_).subspan(n.index * dim_, dim_);
  }
  /// Product of edge probabilities from the root.
  double path_prob(const NodeId& n) const { return path_prob_[n.index]; }

  /// Nodes along the root-to-`n` path, root first.
  std::vector<NodeId> path_to(const NodeId& n) const {
    std::vector<NodeId> out(n.depth + 1);
    NodeId cur = n;
    for (int k = n.depth; k >= 0; --k) {
      out[k] = cur;
      if (k > 0) cur = parent(cur);
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    j["steps"] = grid_.steps;
    j["horizon"] = grid_.horizon;
    if (dim_ != 1) j["dimension"] = dim_;
    return j;
  }

 private:
  void compute_paths() {
    w_.assign(node_count() * dim_, 0.0);
    path_prob_.assign(node_count(), 0.0);
    path_prob_[0] = 1.0;
    for (int k = 0; k < grid_.steps; ++k) {
      for (std::size_t p = 0; p < width(k); ++p) {
        NodeId n = node(k, p);
        for (int i = 0; i < branching_; ++i) {
          NodeId c = child(n, i);
          auto inc = increment(n, i);
          for (int a = 0; a < dim_; ++a) w_[c.index * dim_ + a] = w_[n.index * dim_ + a] + inc[a];
          path_prob_[c.index] = path_prob_[n.index] * prob(n, i);
        }
      }
    }
  }

  LatticeKind kind_;
  TimeGrid grid_;
  int dim_;
  int branching_;
  std::vector<std::size_t> offsets_;
  std::vector<double> probs_;
  std::vector<double> incs_;
  std::vector<double> w_;
  std::vector<double> path_prob_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

namespace detail {
inline void check_grid(int steps, double horizon) {
  if (steps < 1) throw Error(ErrorCode::invalid_parameter, "step count must be >= 1");
  if (!(horizon > 0.0)) throw Error(ErrorCode::invalid_parameter, "horizon must be > 0");
}
}  // namespace detail

/// Two children, increments +-sqrt(dt), probabilities 1/2.
inline LatticePtr build_binomial(int steps, double horizon) {
  detail::check_grid(steps, horizon);
  TimeGrid g{steps, horizon};
  const double s = std::sqrt(g.dt());
  return std::make_shared<const Lattice>(LatticeKind::binomial, g, 1, 2,
                                         std::vector<double>{0.5, 0.5},
                                         std::vector<double>{s, -s});
}

/// Three children, increments {-sqrt(3dt), 0, +sqrt(3dt)}, probabilities
/// {1/6, 2/3, 1/6}: matches the first four moments of the Gaussian step and
/// leaves a non-trivial orthogonal martingale.
inline LatticePtr build_trinomial(int steps, double horizon) {
  detail::check_grid(steps, horizon);
  TimeGrid g{steps, horizon};
  const double s = std::sqrt(3.0 * g.dt());
  return std::make_shared<const Lattice>(LatticeKind::trinomial, g, 1, 3,
                                         std::vector<double>{1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                                         std::vector<double>{-s, 0.0, s});
}

/// Multi-dimensional driver from independent factors on the same grid:
/// increments concatenated, probabilities multiplied. Child order is
/// lexicographic with the first factor's child as the most significant digit.
inline LatticePtr build_product(const std::vector<LatticePtr>& factors) {
  if (factors.empty()) throw Error(ErrorCode::invalid_parameter, "product of zero lattices");
  const TimeGrid g = factors.front()->grid();
  int dim = 0;
  int b = 1;
  for (const auto& f : factors) {
    if (f->steps() != g.steps || f->grid().horizon != g.horizon)
      throw Error(ErrorCode::invalid_parameter, "product factors must share the time grid");
    dim += f->dimension();
    b *= f->branching();
  }
  std::vector<double> probs(b, 1.0);
  std::vector<double> incs(static_cast<std::size_t>(b) * dim, 0.0);
  for (int c = 0; c < b; ++c) {
    int rem = c;
    int stride = b;
    int col = 0;
    for (const auto& f : factors) {
      stride /= f->branching();
      const int i = rem / stride;
      rem %= stride;
      auto e = f->edges(f->root());
      probs[c] *= e.probs[i];
      for (int a = 0; a < f->dimension(); ++a)
        incs[static_cast<std::size_t>(c) * dim + col + a] = e.increments[i * f->dimension() + a];
      col += f->dimension();
    }
  }
  return std::make_shared<const Lattice>(LatticeKind::product, g, dim, b, std::move(probs),
                                         std::move(incs));
}

/// Builds from {"kind": "binomial"|"trinomial", "steps": N, "horizon": T
/// [, "dimension": d]}.
inline LatticePtr lattice_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("steps") || !j.contains("horizon"))
    throw Error(ErrorCode::invalid_parameter, "lattice needs kind, steps, horizon");
  const std::string kind = j.at("kind").get<std::string>();
  const int steps = j.at("steps").get<int>();
  const double horizon = j.at("horizon").get<double>();
  const int dim = j.value("dimension", 1);
  LatticePtr one;
  if (kind == "binomial") one = build_binomial(steps, horizon);
  else if (kind == "trinomial") one = build_trinomial(steps, horizon);
  else throw Error(ErrorCode::invalid_parameter, "unknown lattice kind '" + kind + "'");
  if (dim == 1) return one;
  if (dim < 1) throw Error(ErrorCode::invalid_parameter, "dimension must be >= 1");
  return build_product(std::vector<LatticePtr>(dim, one));
}

/// One-step conditional expectation at `n`. Uses the reference
/// probabilities unless `weights` is given.
inline double node_expectation(const Lattice& lat, const NodeId& n,
                               std::span<const double> child_values,
                               std::optional<std::span<const double>> weights = std::nullopt) {
  if (lat.is_leaf(n)) throw Error(ErrorCode::invalid_parameter, "leaf has no children");
  const auto b = static_cast<std::size_t>(lat.branching());
  if (child_values.size() != b)
    throw Error(ErrorCode::invalid_parameter, "child value count does not match branching");
  std::span<const double> w = lat.edges(n).probs;
  if (weights) {
    if (weights->size() != b)
      throw Error(ErrorCode::invalid_parameter, "weight count does not match branching");
    double sum = 0.0;
    for (double x : *weights) {
      if (!(x > 0.0)) throw Error(ErrorCode::invalid_measure, "weights must be positive");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorCode::invalid_measure, "weights must sum to 1");
    w = *weights;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < b; ++i) acc += w[i] * child_values[i];
  return acc;
}

struct PathWeight {
  NodeId leaf;
  double probability;
};

inline constexpr std::size_t kDefaultPathCap = std::size_t{1} << 20;

/// All root-to-leaf paths with their reference probabilities.
inline std::vector<PathWeight> enumerate_paths(const Lattice& lat,
                                               std::size_t cap = kDefaultPathCap) {
  if (lat.leaf_count() > cap)
    throw Error(ErrorCode::too_large, "leaf count " + std::to_string(lat.leaf_count()) +
                                          " exceeds cap " + std::to_string(cap));
  std::vector<PathWeight> out;
  out.reserve(lat.leaf_count());
  for (std::size_t p = 0; p < lat.leaf_count(); ++p) {
    NodeId l = lat.leaf(p);
    // Recompute the product along the path rather than reading the cached
    // value so this stays an independent route.
    double prob = 1.0;
    auto path = lat.path_to(l);
    for (std::size_t k = 0; k + 1 < path.size(); ++k) prob *= lat.prob(path[k], lat.child_slot(path[k + 1]));
    out.push_back({l, prob});
  }
  return out;
}

}  // namespace glab
