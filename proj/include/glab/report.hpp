#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/decomp.hpp"
#include "glab/error.hpp"
#include "glab/gexp.hpp"
#include "glab/lattice.hpp"

namespace glab::report {

struct Assertion {
  std::string name;
  bool pass = true;
  nlohmann::json value;
  double tolerance = 0.0;
  std::string witness;
};

inline nlohmann::json to_json(const Assertion& a) {
  nlohmann::json j{{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"tolerance", a.tolerance}};
  if (!a.witness.empty()) j["witness"] = a.witness;
  return j;
}

/// A CSV table: fixed header, rows of numbers printed with 17 significant digits.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void write(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    os << std::setprecision(17);
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) os << ',';
        if (!std::isnan(r[i])) os << r[i];
      }
      os << '\n';
    }
  }
};

/// JSON report blocks plus the CSV tables written next to it.
struct Report {
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json outputs = nlohmann::json::object();
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<Assertion> assertions;
  std::vector<Table> tables;

  bool passed() const {
    for (const auto& a : assertions)
      if (!a.pass) return false;
    return true;
  }

  nlohmann::json to_json(const std::string& timestamp) const {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : assertions) a.push_back(report::to_json(x));
    return {{"timestamp", timestamp}, {"inputs", inputs}, {"outputs", outputs},
            {"diagnostics", diagnostics}, {"assertions", a}};
  }
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2); }

/// Writes <dir>/<stem>.json and <dir>/<stem>.<table>.csv. Throws
/// std::runtime_error on an unwritable path.
inline std::vector<std::filesystem::path> write(const Report& r, const std::filesystem::path& dir,
                                                const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  const auto jpath = dir / (stem + ".json");
  std::ofstream js(jpath);
  if (!js) throw std::runtime_error("cannot write " + jpath.string());
  js << dump(r.to_json(utc_timestamp())) << '\n';
  if (!js) throw std::runtime_error("write failed for " + jpath.string());
  out.push_back(jpath);
  for (const auto& t : r.tables) {
    const auto p = dir / (stem + "." + t.name + ".csv");
    std::ofstream cs(p);
    if (!cs) throw std::runtime_error("cannot write " + p.string());
    t.write(cs);
    out.push_back(p);
  }
  return out;
}

// Common tables -------------------------------------------------------------

inline Table process_table(const std::string& name, const LadlagProcess& x) {
  Table t{name, {"depth", "node", "value", "right_value"}, {}};
  const Lattice& L = *x.lattice();
  for (std::size_t i = 0; i < L.node_count(); ++i) {
    const NodeId n = L.node_at(i);
    t.rows.push_back({static_cast<double>(n.depth), static_cast<double>(n.pos), x.value(n),
                      i < L.interior_count() ? x.right_value(n) : std::numeric_limits<double>::quiet_NaN()});
  }
  return t;
}

inline Table process_table(const std::string& name, const AdaptedProcess& x) {
  Table t{name, {"depth", "node", "value"}, {}};
  const Lattice& L = *x.lattice();
  for (std::size_t i = 0; i < L.node_count(); ++i) {
    const NodeId n = L.node_at(i);
    t.rows.push_back({static_cast<double>(n.depth), static_cast<double>(n.pos), x.at(i)});
  }
  return t;
}

/// depth,node,Z_0..Z_{d-1},dA,dN_0..dN_{b-1} over interior nodes.
inline Table decomposition_table(const std::string& name, const Lattice& L, const std::vector<double>& z,
                                 const std::vector<double>& da, const std::vector<double>& dn) {
  const int d = L.dimension(), b = L.branching();
  Table t{name, {"depth", "node"}, {}};
  for (int a = 0; a < d; ++a) t.header.push_back("Z_" + std::to_string(a));
  t.header.push_back("dA");
  for (int c = 0; c < b; ++c) t.header.push_back("dN_" + std::to_string(c));
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    std::vector<double> row{static_cast<double>(n.depth), static_cast<double>(n.pos)};
    for (int a = 0; a < d; ++a) row.push_back(z[i * d + a]);
    row.push_back(da.empty() ? std::numeric_limits<double>::quiet_NaN() : da[i]);
    for (int c = 0; c < b; ++c) row.push_back(dn[i * b + c]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline nlohmann::json per_depth(const Lattice& L, const std::vector<double>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (int k = 0; k <= L.steps(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < L.width(k); ++p) {
      const double x = v[L.offset(k) + p];
      row.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
    }
    j.push_back(row);
  }
  return j;
}

}  // namespace glab::report
