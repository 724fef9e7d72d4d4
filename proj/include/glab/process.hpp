#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/error.hpp"
#include "glab/lattice.hpp"

namespace glab {

/// Position on the doubled time grid: slot 2k is t_k, slot 2k+1 is t_k+.
/// The terminal date has only slot 2N.
inline int slot_of(int depth, bool right) { return 2 * depth + (right ? 1 : 0); }
inline int depth_of_slot(int slot) { return slot / 2; }
inline bool is_right_slot(int slot) { return slot % 2 == 1; }

/// One real per node.
class AdaptedProcess {
 public:
  AdaptedProcess() = default;
  explicit AdaptedProcess(LatticePtr lat, double fill = 0.0)
      : lat_(std::move(lat)), values_(lat_->node_count(), fill) {}
  AdaptedProcess(LatticePtr lat, std::vector<double> values)
      : lat_(std::move(lat)), values_(std::move(values)) {
    if (values_.size() != lat_->node_count())
      throw Error(ErrorCode::invalid_parameter, "adapted process needs one value per node");
  }

  const LatticePtr& lattice() const { return lat_; }
  double operator[](const NodeId& n) const { return values_[n.index]; }
  double& operator[](const NodeId& n) { return values_[n.index]; }
  double at(std::size_t index) const { return values_[index]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  LatticePtr lat_;
  std::vector<double> values_;
};

/// Process on the doubled grid: `value` at every t_k and `right_value` (the
/// value on the open interval (t_k, t_{k+1})) at every non-terminal node.
class LadlagProcess {
 public:
  LadlagProcess() = default;
  explicit LadlagProcess(LatticePtr lat)
      : lat_(std::move(lat)), value_(lat_->node_count(), 0.0), right_(lat_->interior_count(), 0.0) {}
  LadlagProcess(LatticePtr lat, std::vector<double> value, std::vector<double> right_value)
      : lat_(std::move(lat)), value_(std::move(value)), right_(std::move(right_value)) {
    if (value_.size() != lat_->node_count() || right_.size() != lat_->interior_count())
      throw Error(ErrorCode::invalid_parameter, "ladlag process sizes do not match lattice");
  }
  /// Continuous embedding: right_value = value.
  static LadlagProcess from_adapted(const AdaptedProcess& x) {
    const auto& lat = x.lattice();
    std::vector<double> r(x.values().begin(), x.values().begin() + lat->interior_count());
    return LadlagProcess(lat, x.values(), std::move(r));
  }

  const LatticePtr& lattice() const { return lat_; }
  double value(const NodeId& n) const { return value_[n.index]; }
  double right_value(const NodeId& n) const { return right_[n.index]; }
  double& value(const NodeId& n) { return value_[n.index]; }
  double& right_value(const NodeId& n) { return right_[n.index]; }
  /// value - right_value at an interior node.
  double right_jump(const NodeId& n) const { return value_[n.index] - right_[n.index]; }
  double at_slot(const NodeId& n, int slot) const {
    return is_right_slot(slot) ? right_[n.index] : value_[n.index];
  }
  const std::vector<double>& values() const { return value_; }
  const std::vector<double>& right_values() const { return right_; }
  AdaptedProcess value_process() const { return AdaptedProcess(lat_, value_); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["value"] = nlohmann::json::array();
    j["right_value"] = nlohmann::json::array();
    for (int k = 0; k <= lat_->steps(); ++k) {
      std::vector<double> v(value_.begin() + lat_->offset(k), value_.begin() + lat_->offset(k + 1));
      j["value"].push_back(v);
      if (k < lat_->steps()) {
        std::vector<double> r(right_.begin() + lat_->offset(k), right_.begin() + lat_->offset(k + 1));
        j["right_value"].push_back(r);
      }
    }
    return j;
  }

  static LadlagProcess from_json(LatticePtr lat, const nlohmann::json& j) {
    LadlagProcess x(lat);
    const auto& v = j.at("value");
    if (v.size() != static_cast<std::size_t>(lat->steps() + 1))
      throw Error(ErrorCode::invalid_parameter, "ladlag json: expected one 'value' array per depth");
    bool has_right = j.contains("right_value");
    if (has_right && j.at("right_value").size() != static_cast<std::size_t>(lat->steps()))
      throw Error(ErrorCode::invalid_parameter, "ladlag json: expected N 'right_value' arrays");
    for (int k = 0; k <= lat->steps(); ++k) {
      if (v[k].size() != lat->width(k))
        throw Error(ErrorCode::invalid_parameter, "ladlag json: wrong width at depth " + std::to_string(k));
      for (std::size_t p = 0; p < lat->width(k); ++p) {
        NodeId n = lat->node(k, p);
        x.value(n) = v[k][p].get<double>();
        if (k < lat->steps()) {
          if (has_right) {
            const auto& r = j.at("right_value")[k];
            if (r.size() != lat->width(k))
              throw Error(ErrorCode::invalid_parameter, "ladlag json: wrong right width at depth " + std::to_string(k));
            x.right_value(n) = r[p].get<double>();
          } else {
            x.right_value(n) = x.value(n);
          }
        }
      }
    }
    return x;
  }

  /// Columns: depth,node,value,right_value (right_value empty at depth N).
  void write_csv(std::ostream& os) const {
    os << "depth,node,value,right_value\n";
    os.precision(17);
    for (std::size_t i = 0; i < lat_->node_count(); ++i) {
      NodeId n = lat_->node_at(i);
      os << n.depth << ',' << n.pos << ',' << value_[i] << ',';
      if (i < lat_->interior_count()) os << right_[i];
      os << '\n';
    }
  }

 private:
  LatticePtr lat_;
  std::vector<double> value_;
  std::vector<double> right_;
};

/// A stopping time on the doubled grid. Each node carries a flag
/// (continue, stop at t_k, stop at t_k+); the time along a path is the first
/// flagged node, and paths with no flag stop at the leaf. Flags depend only
/// on the node itself, so the time is adapted by construction. Flags below an
/// earlier stop are cleared on construction.
class StoppingTime {
 public:
  static constexpr std::int8_t kContinue = -1;
  static constexpr std::int8_t kStopValue = 0;
  static constexpr std::int8_t kStopRight = 1;

  StoppingTime() = default;

  static StoppingTime from_flags(LatticePtr lat, std::vector<std::int8_t> flags) {
    if (flags.size() != lat->node_count())
      throw Error(ErrorCode::invalid_parameter, "stopping time needs one flag per node");
    StoppingTime t;
    t.lat_ = std::move(lat);
    t.flag_ = std::move(flags);
    t.normalize();
    return t;
  }

  /// Stops every path at the given doubled-grid slot.
  static StoppingTime deterministic(LatticePtr lat, int slot) {
    const int depth = depth_of_slot(slot);
    if (slot < 0 || depth > lat->steps() || (depth == lat->steps() && is_right_slot(slot)))
      throw Error(ErrorCode::invalid_parameter, "slot outside the doubled grid");
    std::vector<std::int8_t> f(lat->node_count(), kContinue);
    for (std::size_t p = 0; p < lat->width(depth); ++p)
      f[lat->offset(depth) + p] = is_right_slot(slot) ? kStopRight : kStopValue;
    return from_flags(std::move(lat), std::move(f));
  }

  static StoppingTime terminal(LatticePtr lat) {
    const int n = lat->steps();
    return deterministic(std::move(lat), slot_of(n, false));
  }

  const LatticePtr& lattice() const { return lat_; }

  /// True when the time stops at this node (either slot).
  bool stops_at(const NodeId& n) const { return stop_here_[n.index] != 0; }
  /// Doubled-grid slot of the stop at `n`; only valid when stops_at(n).
  int slot_at(const NodeId& n) const { return resolved_[n.index]; }
  /// Slot of the stop if it happened at this node or an ancestor, else -1.
  int resolved(const NodeId& n) const { return resolved_[n.index]; }
  /// Stopping slot along the path through `leaf`.
  int slot_on_path(const NodeId& leaf) const { return resolved_[leaf.index]; }

  std::vector<NodeId> stopped_nodes() const {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < stop_here_.size(); ++i)
      if (stop_here_[i]) out.push_back(lat_->node_at(i));
    return out;
  }
  const std::vector<std::int8_t>& flags() const { return flag_; }

  bool is_deterministic() const {
    const int s = resolved_[lat_->offset(lat_->steps())];
    for (std::size_t p = 0; p < lat_->leaf_count(); ++p)
      if (resolved_[lat_->offset(lat_->steps()) + p] != s) return false;
    return true;
  }

 private:
  void normalize() {
    const auto& lat = *lat_;
    resolved_.assign(lat.node_count(), -1);
    stop_here_.assign(lat.node_count(), 0);
    for (std::size_t i = 0; i < lat.node_count(); ++i) {
      NodeId n = lat.node_at(i);
      if (n.depth > 0) {
        int up = resolved_[lat.parent(n).index];
        if (up >= 0) {
          resolved_[i] = up;
          flag_[i] = kContinue;
          continue;
        }
      }
      std::int8_t f = flag_[i];
      if (lat.is_leaf(n) && f == kStopRight) f = kStopValue;
      if (lat.is_leaf(n) && f == kContinue) f = kStopValue;
      flag_[i] = f;
      if (f != kContinue) {
        resolved_[i] = slot_of(n.depth, f == kStopRight);
        stop_here_[i] = 1;
      }
    }
  }

  LatticePtr lat_;
  std::vector<std::int8_t> flag_;
  std::vector<int> resolved_;
  std::vector<std::uint8_t> stop_here_;
};

namespace detail {
template <class Pick>
StoppingTime combine(const StoppingTime& a, const StoppingTime& b, Pick pick) {
  const auto& lat = a.lattice();
  if (lat != b.lattice()) throw Error(ErrorCode::invalid_parameter, "stopping times on different lattices");
  // Per leaf target slot, then flag the node that owns it; a stopping time
  // is recovered because the target slot is a function of the history up to
  // that slot.
  std::vector<std::int8_t> f(lat->node_count(), StoppingTime::kContinue);
  for (std::size_t p = 0; p < lat->leaf_count(); ++p) {
    NodeId l = lat->leaf(p);
    const int s = pick(a.slot_on_path(l), b.slot_on_path(l));
    NodeId n = l;
    while (n.depth > depth_of_slot(s)) n = lat->parent(n);
    f[n.index] = is_right_slot(s) ? StoppingTime::kStopRight : StoppingTime::kStopValue;
  }
  return StoppingTime::from_flags(lat, std::move(f));
}
}  // namespace detail

inline StoppingTime earliest(const StoppingTime& a, const StoppingTime& b) {
  return detail::combine(a, b, [](int x, int y) { return std::min(x, y); });
}
inline StoppingTime latest(const StoppingTime& a, const StoppingTime& b) {
  return detail::combine(a, b, [](int x, int y) { return std::max(x, y); });
}

/// a <= b along every path.
inline bool precedes(const StoppingTime& a, const StoppingTime& b) {
  const auto& lat = *a.lattice();
  for (std::size_t p = 0; p < lat.leaf_count(); ++p) {
    NodeId l = lat.leaf(p);
    if (a.slot_on_path(l) > b.slot_on_path(l)) return false;
  }
  return true;
}

/// Earliest node on each path whose value is >= threshold.
inline StoppingTime first_hitting_time(const AdaptedProcess& p, double threshold) {
  const auto& lat = p.lattice();
  std::vector<std::int8_t> f(lat->node_count(), StoppingTime::kContinue);
  for (std::size_t i = 0; i < lat->node_count(); ++i)
    if (p.at(i) >= threshold) f[i] = StoppingTime::kStopValue;
  return StoppingTime::from_flags(lat, std::move(f));
}

/// Random stopping time: each node stops with probability `rate`, on either
/// slot.
template <class Rng>
StoppingTime random_stopping_time(const LatticePtr& lat, Rng& rng, double rate = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::int8_t> f(lat->node_count(), StoppingTime::kContinue);
  for (auto& x : f) {
    if (u(rng) < rate) x = u(rng) < 0.5 ? StoppingTime::kStopValue : StoppingTime::kStopRight;
  }
  return StoppingTime::from_flags(lat, std::move(f));
}

/// Values of a random variable measurable at a stopping time: one entry per
/// node, meaningful only where `time` stops.
struct StoppedValues {
  StoppingTime time;
  std::vector<double> values;

  double operator[](const NodeId& n) const { return values[n.index]; }
};

inline StoppedValues evaluate_at(const LadlagProcess& x, const StoppingTime& tau) {
  if (x.lattice() != tau.lattice())
    throw Error(ErrorCode::invalid_parameter, "process and stopping time live on different lattices");
  StoppedValues out{tau, std::vector<double>(x.lattice()->node_count(),
                                             std::numeric_limits<double>::quiet_NaN())};
  for (const NodeId& n : tau.stopped_nodes()) out.values[n.index] = x.at_slot(n, tau.slot_at(n));
  return out;
}

inline StoppedValues evaluate_at(const AdaptedProcess& x, const StoppingTime& tau) {
  if (x.lattice() != tau.lattice())
    throw Error(ErrorCode::invalid_parameter, "process and stopping time live on different lattices");
  StoppedValues out{tau, std::vector<double>(x.lattice()->node_count(),
                                             std::numeric_limits<double>::quiet_NaN())};
  for (const NodeId& n : tau.stopped_nodes()) out.values[n.index] = x[n];
  return out;
}

/// Terminal values (one per leaf, leaf order) as a stopped variable at T.
inline StoppedValues terminal_values(const LatticePtr& lat, std::span<const double> leaves) {
  if (leaves.size() != lat->leaf_count())
    throw Error(ErrorCode::invalid_parameter, "need one terminal value per leaf");
  StoppedValues out{StoppingTime::terminal(lat),
                    std::vector<double>(lat->node_count(), std::numeric_limits<double>::quiet_NaN())};
  for (std::size_t p = 0; p < leaves.size(); ++p) out.values[lat->offset(lat->steps()) + p] = leaves[p];
  return out;
}

/// Family {S(tau)} indexed by stopping times.
struct TSystem {
  LatticePtr lattice;
  std::vector<StoppedValues> members;
};

/// The unique ladlag process agreeing with every member on its stopped
/// nodes. The family must contain every deterministic doubled-grid time.
/// Throws under-determined when a grid slot is uncovered and
/// aggregation-failure (with witness node) on inconsistent members.
inline LadlagProcess aggregate_t_system(const TSystem& s, double tol = 0.0) {
  const auto& lat = s.lattice;
  const std::size_t nodes = lat->node_count();
  std::vector<double> val(nodes, 0.0), right(lat->interior_count(), 0.0);
  std::vector<int> owner_v(nodes, -1), owner_r(lat->interior_count(), -1);
  for (std::size_t m = 0; m < s.members.size(); ++m) {
    const auto& mem = s.members[m];
    if (mem.time.lattice() != lat)
      throw Error(ErrorCode::invalid_parameter, "T-system member on a different lattice");
    for (const NodeId& n : mem.time.stopped_nodes()) {
      const int slot = mem.time.slot_at(n);
      const double x = mem.values[n.index];
      auto& owner = is_right_slot(slot) ? owner_r[n.index] : owner_v[n.index];
      double& dst = is_right_slot(slot) ? right[n.index] : val[n.index];
      if (owner < 0) {
        owner = static_cast<int>(m);
        dst = x;
      } else if (!(std::abs(dst - x) <= tol)) {
        std::ostringstream os;
        os << "members " << owner << " and " << m << " disagree at node " << n.index << " (depth "
           << n.depth << ", slot " << slot << "): " << dst << " vs " << x;
        throw Error(ErrorCode::aggregation_failure, os.str(), n.index);
      }
    }
  }
  for (std::size_t i = 0; i < nodes; ++i) {
    if (owner_v[i] < 0)
      throw Error(ErrorCode::under_determined, "no member stops at t_k for node " + std::to_string(i), i);
    if (i < lat->interior_count() && owner_r[i] < 0)
      throw Error(ErrorCode::under_determined, "no member stops at t_k+ for node " + std::to_string(i), i);
  }
  return LadlagProcess(lat, std::move(val), std::move(right));
}

/// All deterministic doubled-grid times t_0, t_0+, ..., t_N.
inline std::vector<StoppingTime> doubled_grid_times(const LatticePtr& lat) {
  std::vector<StoppingTime> out;
  for (int s = 0; s <= 2 * lat->steps(); ++s) out.push_back(StoppingTime::deterministic(lat, s));
  return out;
}

}  // namespace glab
