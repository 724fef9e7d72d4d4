#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glab/constrained.hpp"
#include "glab/crossings.hpp"
#include "glab/decomp.hpp"
#include "glab/emm.hpp"
#include "glab/generator.hpp"
#include "glab/gexp.hpp"
#include "glab/lattice.hpp"
#include "glab/payoff.hpp"
#include "glab/report.hpp"
#include "glab/verify/acceptance.hpp"
#include "glab/verify/instances.hpp"
#include "glab/verify/oracles.hpp"

namespace glab::scenario {

enum Exit : int { kPass = 0, kConfig = 1, kAssertion = 2 };

/// Schema problem: names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool quick = false;
};

struct Result {
  int exit = kPass;
  std::string message;
  report::Report report;
};

inline const std::vector<std::string>& tasks() {
  static const std::vector<std::string> t{"solve", "decompose", "mertens", "reflect",
                                          "crossings", "dual", "optional", "selftest"};
  return t;
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("missing field '" + where + (where.empty() ? "" : ".") + key + "'");
  return j.at(key);
}

template <class T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("field '" + where + (where.empty() ? "" : ".") + key + "': " + e.what());
  }
}

struct Context {
  nlohmann::json cfg;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  LatticePtr lat;
  std::optional<Generator> g;
};

inline Context make_context(const nlohmann::json& cfg, const RunOptions& opt) {
  Context c;
  c.cfg = cfg;
  c.seed = opt.seed ? *opt.seed : get<std::uint64_t>(cfg, "seed", "", 1);
  c.tol = opt.tol ? *opt.tol : get<double>(cfg, "tolerance", "", 1e-9);
  if (!(c.tol > 0.0)) throw ConfigError("field 'tolerance' must be > 0");
  try {
    c.lat = lattice_from_json(field(cfg, "lattice", ""));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field 'lattice': ") + e.what());
  }
  if (cfg.contains("generator")) {
    try {
      c.g = gen::from_json(cfg.at("generator"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("field 'generator': ") + e.what());
    }
  } else {
    c.g = gen::zero();
  }
  return c;
}

inline std::vector<double> leaves(const Context& c, const char* key = "payoff") {
  try {
    return payoff::from_json(*c.lat, field(c.cfg, key, ""));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

/// "process": explicit {"value", "right_value"} arrays or
/// {"construct": "forward", ...} built from the scenario seed.
struct InputProcess {
  LadlagProcess x;
  std::optional<inst::ForwardInstance> forward;
};

inline InputProcess input_process(const Context& c, inst::ForwardOptions defaults) {
  nlohmann::json p = c.cfg.contains("process") ? c.cfg.at("process") : nlohmann::json{{"construct", "forward"}};
  if (p.contains("value")) {
    try {
      return {LadlagProcess::from_json(c.lat, p), std::nullopt};
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("field 'process': ") + e.what());
    }
  }
  if (get<std::string>(p, "construct", "process", "forward") != "forward")
    throw ConfigError("field 'process.construct' must be 'forward'");
  defaults.z_scale = get<double>(p, "z_scale", "process", defaults.z_scale);
  defaults.a_scale = get<double>(p, "a_scale", "process", defaults.a_scale);
  defaults.n_scale = get<double>(p, "n_scale", "process", defaults.n_scale);
  defaults.jump_prob = get<double>(p, "jump_prob", "process", defaults.jump_prob);
  defaults.jump_scale = get<double>(p, "jump_scale", "process", defaults.jump_scale);
  defaults.x0_lo = get<double>(p, "x0_lo", "process", defaults.x0_lo);
  defaults.x0_hi = get<double>(p, "x0_hi", "process", defaults.x0_hi);
  inst::Rng rng(c.seed);
  auto f = inst::forward_construct(c.lat, *c.g, rng, defaults);
  return {f.X, f};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline report::Assertion check_le(const std::string& name, double value, double tol) {
  return {name, value <= tol, value, tol, {}};
}

// Tasks -----------------------------------------------------------------------

inline void task_solve(const Context& c, report::Report& r) {
  const Lattice& L = *c.lat;
  auto xi = leaves(c);
  auto s = solve_bsde(c.lat, *c.g, xi);
  const double y0 = s.Y[L.root()];
  double orth = 0.0;
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    auto e = L.edges(L.node_at(i));
    const int b = L.branching(), d = L.dimension();
    double m = 0.0;
    std::vector<double> w(d, 0.0);
    for (int k = 0; k < b; ++k) {
      m += e.probs[k] * s.dN[i * b + k];
      for (int a = 0; a < d; ++a) w[a] += e.probs[k] * s.dN[i * b + k] * e.increments[k * d + a];
    }
    orth = std::max(orth, std::abs(m));
    for (double x : w) orth = std::max(orth, std::abs(x));
  }
  r.outputs["Y0"] = y0;
  r.outputs["Y"] = report::per_depth(L, s.Y.values());
  r.diagnostics["max_iterations"] = s.diagnostics.max_iterations;
  r.diagnostics["max_residual"] = s.diagnostics.max_residual;
  r.assertions.push_back(check_le("orthogonality of N", orth, 1e-10));
  r.assertions.push_back(check_le("one-step identity residual", s.diagnostics.max_residual, c.tol));
  if (c.cfg.contains("expect")) {
    const double want = get<double>(c.cfg.at("expect"), "Y0", "expect", y0);
    r.assertions.push_back(check_le("Y0 matches expectation", std::abs(y0 - want), c.tol));
  }
  r.tables.push_back(report::process_table("Y", s.Y));
  r.tables.push_back(report::decomposition_table("bsde", L, s.Z, {}, s.dN));
}

inline void task_decompose(const Context& c, report::Report& r) {
  const Lattice& L = *c.lat;
  auto in = input_process(c, {});
  auto x = in.x.value_process();
  auto d = doob_meyer(x, *c.g, c.tol);
  r.outputs["A_root_to_leaf"] = report::per_depth(L, d.A.values());
  r.outputs["min_dA"] = d.min_dA;
  r.diagnostics["reconstruction_residual"] = d.reconstruction_residual;
  r.assertions.push_back({"dA >= -tol", d.min_dA >= -c.tol, d.min_dA, c.tol, {}});
  r.assertions.push_back(check_le("reconstruction residual", d.reconstruction_residual, c.tol));
  if (in.forward) {
    r.assertions.push_back(check_le("Z recovered", max_abs_diff(d.Z, in.forward->Z), c.tol));
    r.assertions.push_back(check_le("A recovered", max_abs_diff(d.dA, in.forward->dA), c.tol));
    r.assertions.push_back(check_le("N recovered", max_abs_diff(d.dN, in.forward->dN), c.tol));
  }
  r.tables.push_back(report::process_table("X", in.x));
  r.tables.push_back(report::decomposition_table("decomposition", L, d.Z, d.dA, d.dN));
}

inline void task_mertens(const Context& c, report::Report& r) {
  const Lattice& L = *c.lat;
  inst::ForwardOptions fo;
  fo.jump_prob = 0.4;
  auto in = input_process(c, fo);
  auto md = mertens_decompose(in.x, *c.g, c.tol);
  r.outputs["I"] = md.correction.I.to_json();
  r.outputs["Xbar"] = report::per_depth(L, md.correction.Xbar.values());
  r.outputs["min_dA"] = md.min_dA;
  r.outputs["eta"] = md.eta;
  r.diagnostics["reconstruction_residual"] = md.reconstruction_residual;
  r.diagnostics["localization_levels"] = md.localization;
  r.diagnostics["i_bound"] = {{"lhs", md.ibound.lhs}, {"rhs", md.ibound.rhs}, {"C_L", md.ibound.c_l},
                              {"p", md.ibound.p}, {"holds", md.ibound.holds}};
  r.assertions.push_back({"dA >= -tol", md.min_dA >= -c.tol, md.min_dA, c.tol, {}});
  r.assertions.push_back(check_le("reconstruction residual", md.reconstruction_residual, c.tol));
  if (in.forward) {
    std::vector<double> want(in.forward->dA.size());
    for (std::size_t i = 0; i < want.size(); ++i) want[i] = in.forward->dA[i] + in.forward->jump[i];
    r.assertions.push_back(check_le("A recovered", max_abs_diff(md.dA, want), c.tol));
    r.assertions.push_back(check_le("Z recovered", max_abs_diff(md.Z, in.forward->Z), c.tol));
  }
  r.tables.push_back(report::process_table("X", in.x));
  r.tables.push_back(report::process_table("I", md.correction.I));
  r.tables.push_back(report::decomposition_table("decomposition", L, md.Z, md.dA, md.dN));
}

inline AdaptedProcess obstacle_process(const Context& c) {
  const Lattice& L = *c.lat;
  const auto& o = field(c.cfg, "obstacle", "");
  if (o.contains("value")) {
    LadlagProcess x = LadlagProcess::from_json(c.lat, o);
    return x.value_process();
  }
  const std::string kind = get<std::string>(o, "kind", "obstacle", "");
  const double k = get<double>(o, "strike", "obstacle", 0.0);
  AdaptedProcess x(c.lat);
  for (std::size_t i = 0; i < L.node_count(); ++i) {
    const double w = L.w(L.node_at(i))[0];
    if (kind == "put") x.values()[i] = std::max(k - w, 0.0);
    else if (kind == "call") x.values()[i] = std::max(w - k, 0.0);
    else throw ConfigError("field 'obstacle.kind' must be 'put' or 'call' (or give 'value' arrays)");
  }
  return x;
}

inline void task_reflect(const Context& c, report::Report& r) {
  const Lattice& L = *c.lat;
  AdaptedProcess obstacle = obstacle_process(c);
  std::vector<double> xi(L.leaf_count());
  if (c.cfg.contains("payoff")) xi = leaves(c);
  else for (std::size_t p = 0; p < xi.size(); ++p) xi[p] = obstacle[L.leaf(p)];
  auto s = reflected_bsde(obstacle, xi, *c.g);
  double below = 0.0;
  for (std::size_t i = 0; i < L.node_count(); ++i) below = std::max(below, obstacle.at(i) - s.Y.at(i));
  r.outputs["Y0"] = s.Y[L.root()];
  r.outputs["Y"] = report::per_depth(L, s.Y.values());
  r.outputs["K"] = report::per_depth(L, s.K.values());
  r.diagnostics["skorokhod_residual"] = s.skorokhod_residual;
  r.assertions.push_back(check_le("Y >= obstacle", below, c.tol));
  r.assertions.push_back(check_le("Skorokhod condition", s.skorokhod_residual, c.tol));
  auto pens = get<std::vector<double>>(c.cfg, "penalties", "", {});
  if (!pens.empty()) {
    std::sort(pens.begin(), pens.end());
    std::vector<double> y0;
    bool mono = true;
    for (double n : pens) {
      y0.push_back(penalized_reflected(obstacle, xi, *c.g, n).Y[L.root()]);
      if (y0.size() > 1 && y0.back() < y0[y0.size() - 2] - 1e-12) mono = false;
    }
    r.outputs["penalties"] = pens;
    r.outputs["penalized_Y0"] = y0;
    r.assertions.push_back({"penalized Y0 non-decreasing in n", mono, y0, 1e-12, {}});
    r.diagnostics["penalized_gap"] = std::abs(y0.back() - s.Y[L.root()]);
  }
  const bool small = (L.branching() == 2 && L.steps() <= 4) || (L.branching() == 3 && L.steps() <= 3);
  if (small && c.g->to_json().at("family") == "zero") {
    const double snell = oracle::snell_brute_force(obstacle);
    r.outputs["snell_enumeration"] = snell;
    r.assertions.push_back(check_le("matches stopping-time enumeration", std::abs(snell - s.Y[L.root()]), 1e-10));
  }
  r.tables.push_back(report::process_table("Y", s.Y));
}

inline void task_crossings(const Context& c, report::Report& r) {
  inst::ForwardOptions fo;
  fo.z_scale = 2.5;
  auto in = input_process(c, fo);
  const double a = get<double>(c.cfg, "a", "", 0.0), b = get<double>(c.cfg, "b", "", 1.0);
  auto x = in.x.value_process();
  auto j = grid_times(c.lat);
  auto rep = downcrossing_bound_check(x, *c.g, a, b, j, c.tol);
  auto red = downcrossing_bound_check_shifted(x, *c.g, a, b, j, c.tol);
  r.outputs = {{"a", a}, {"b", b}, {"lhs", rep.lhs}, {"rhs", rep.rhs}, {"margin", rep.margin},
               {"L", rep.lip_y}, {"mu", rep.lip_z}, {"trials", 1}, {"failures", rep.pass ? 0 : 1}};
  r.diagnostics["counts"] = rep.counts;
  r.diagnostics["reduced_margin"] = red.margin;
  r.assertions.push_back({"margin >= -tol", rep.pass, rep.margin, c.tol, {}});
  r.assertions.push_back(check_le("reduction (0, b - a) agrees",
                                  std::max(std::abs(rep.lhs - red.lhs), std::abs(rep.rhs - red.rhs)), 1e-10));
  r.tables.push_back(report::process_table("X", in.x));
}

inline void task_dual(const Context& c, report::Report& r) {
  const Lattice& L = *c.lat;
  ConstraintSet o = ConstraintSet::interval(-1, 1);
  ControlGrid grid;
  try {
    o = ConstraintSet::from_json(field(c.cfg, "constraint", ""));
    grid = controls_from_json(field(c.cfg, "controls", ""), o);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field 'constraint'/'controls': ") + e.what());
  }
  auto pens = get<std::vector<double>>(c.cfg, "penalties", "", {1, 10, 100, 1000});
  DualityOptions dopt;
  dopt.weak_tol = c.tol;
  dopt.ceiling = get<double>(c.cfg, "ceiling", "", dopt.ceiling);
  auto xi = leaves(c);
  auto d = duality_gap(c.lat, *c.g, o, xi, pens, grid, dopt);
  r.outputs = {{"penalties", d.penalties}, {"primal_Y0", d.primal}, {"dual_S0", d.dual}, {"gap", d.gap},
               {"violation", d.violation}, {"e_nu", d.e_nu}, {"root_control", d.root_control},
               {"controls_used", d.controls_used}, {"control_bound", grid.bound}};
  r.diagnostics["primal_unbounded"] = d.primal_unbounded;
  r.diagnostics["unconstrained_violation"] = d.unconstrained_violation;
  r.diagnostics["warnings"] = d.warnings;
  r.assertions.push_back({"weak duality S0 <= Y^n_0 + tol", d.weak_duality, d.weak_duality_slack, c.tol, {}});
  r.assertions.push_back({"Y^n_0 non-decreasing in n", d.primal_monotone, d.primal, 1e-12, {}});
  if (c.cfg.contains("gap_tolerance"))
    r.assertions.push_back(check_le("|gap| within tolerance", std::abs(d.gap), c.cfg.at("gap_tolerance").get<double>()));
  auto ds = solve_dual(c.lat, *c.g, o, xi, grid);
  report::Table t{"dual", {"depth", "node", "S"}, {}};
  for (int a = 0; a < L.dimension(); ++a) t.header.push_back("control_" + std::to_string(a));
  for (std::size_t i = 0; i < L.node_count(); ++i) {
    const NodeId n = L.node_at(i);
    std::vector<double> row{static_cast<double>(n.depth), static_cast<double>(n.pos), ds.S.at(i)};
    for (int a = 0; a < L.dimension(); ++a)
      row.push_back(i < L.interior_count() ? ds.controls[ds.argmax[i]][a] : std::nan(""));
    t.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(t));
}

inline void task_optional(const Context& c, report::Report& r) {
  const Lattice& L = *c.lat;
  inst::ForwardOptions fo;
  fo.n_scale = 0.0;
  fo.jump_prob = 0.3;
  auto in = input_process(c, fo);
  std::vector<double> q_up{0.1, 1.0 / 6.0, 0.25, 0.4};
  if (c.cfg.contains("family")) {
    try {
      q_up = q_up_from_json(c.cfg.at("family"));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("field 'family.q_up': ") + e.what());
    }
  }
  const double alpha = get<double>(c.cfg, "alpha", "", 1.0);
  std::vector<double> al(L.interior_count() * L.dimension() * L.dimension(), alpha);
  MartingaleDriver m(c.lat, al, std::max(std::abs(alpha), 1.0 / std::abs(alpha)));
  auto fam = build_emm_family(m, q_up);
  auto checks = check_q_supermartingale(in.x, *c.g, m, fam, c.tol);
  nlohmann::json per = nlohmann::json::array();
  for (const auto& q : checks)
    per.push_back({{"q_up", q.q_up}, {"violations", q.report.violations.size()}, {"worst_margin", q.report.worst_margin}});
  r.diagnostics["q_supermartingale"] = per;
  auto od = optional_decompose(in.x, *c.g, m, fam, c.tol);
  r.outputs = {{"Z", od.Z}, {"max_dC", od.max_dC}, {"z_agreement", od.z_agreement}, {"q_up", q_up}};
  r.diagnostics["martingale_error"] = fam.max_martingale_error;
  r.assertions.push_back({"Z aggregates across the family", od.aggregated, od.z_agreement, 1e-8,
                          od.aggregated ? "" : "node " + std::to_string(od.z_witness)});
  r.assertions.push_back({"C non-increasing edge-wise", od.non_increasing, od.max_dC, c.tol,
                          od.non_increasing ? "" : "edge " + std::to_string(od.dC_witness)});
  r.assertions.push_back(check_le("martingale constraint", fam.max_martingale_error, 1e-12));
  if (in.forward) r.assertions.push_back(check_le("Z recovered", max_abs_diff(od.Z, in.forward->Z), 1e-10));
  r.tables.push_back(report::process_table("X", in.x));
  report::Table t{"optional", {"depth", "node"}, {}};
  const int d = L.dimension(), b = L.branching();
  for (int a = 0; a < d; ++a) t.header.push_back("Z_" + std::to_string(a));
  for (int k = 0; k < b; ++k) t.header.push_back("dC_" + std::to_string(k));
  for (std::size_t i = 0; i < L.interior_count(); ++i) {
    const NodeId n = L.node_at(i);
    std::vector<double> row{static_cast<double>(n.depth), static_cast<double>(n.pos)};
    for (int a = 0; a < d; ++a) row.push_back(od.Z[i * d + a]);
    for (int k = 0; k < b; ++k) row.push_back(od.dC[i * b + k]);
    t.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(t));
}

}  // namespace detail

inline Result run_selftest(std::uint64_t seed, bool quick) {
  Result res;
  acceptance::Options o{seed, quick};
  auto cs = acceptance::run_all(o);
  res.report.inputs = {{"task", "selftest"}, {"seed", seed}, {"quick", quick}};
  for (const auto& c : cs) {
    res.report.assertions.push_back({std::to_string(c.id) + ". " + c.name, c.pass, c.detail, 0.0, {}});
  }
  res.exit = res.report.passed() ? kPass : kAssertion;
  return res;
}

/// Runs one scenario object. Never throws: schema and library errors map to
/// the exit codes.
inline Result run(const nlohmann::json& cfg, const RunOptions& opt = {}) {
  Result res;
  res.report.inputs = cfg;
  try {
    if (!cfg.is_object()) throw ConfigError("scenario must be a JSON object");
    const std::string task = detail::get<std::string>(cfg, "task", "", "");
    if (task.empty()) throw ConfigError("missing field 'task'");
    if (std::find(tasks().begin(), tasks().end(), task) == tasks().end())
      throw ConfigError("field 'task': unknown task '" + task + "'");
    if (task == "selftest") {
      const std::uint64_t seed = opt.seed ? *opt.seed : detail::get<std::uint64_t>(cfg, "seed", "", 20240611);
      Result r = run_selftest(seed, opt.quick || detail::get<bool>(cfg, "quick", "", false));
      r.report.inputs = cfg;
      return r;
    }
    auto c = detail::make_context(cfg, opt);
    res.report.inputs["seed"] = c.seed;
    res.report.inputs["tolerance"] = c.tol;
    if (task == "solve") detail::task_solve(c, res.report);
    else if (task == "decompose") detail::task_decompose(c, res.report);
    else if (task == "mertens") detail::task_mertens(c, res.report);
    else if (task == "reflect") detail::task_reflect(c, res.report);
    else if (task == "crossings") detail::task_crossings(c, res.report);
    else if (task == "dual") detail::task_dual(c, res.report);
    else if (task == "optional") detail::task_optional(c, res.report);
    res.exit = res.report.passed() ? kPass : kAssertion;
    if (res.exit != kPass) res.message = "assertion failure";
  } catch (const ConfigError& e) {
    res.exit = kConfig;
    res.message = std::string("config error: ") + e.what();
  } catch (const nlohmann::json::exception& e) {
    res.exit = kConfig;
    res.message = std::string("config error: ") + e.what();
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::invalid_parameter:
      case ErrorCode::invalid_family:
      case ErrorCode::invalid_measure:
      case ErrorCode::too_large:
      case ErrorCode::step_too_coarse:
      case ErrorCode::no_feasible_control:
        res.exit = kConfig;
        res.message = std::string("config error: ") + e.what();
        break;
      default: {
        res.exit = kAssertion;
        res.message = e.what();
        report::Assertion a{to_string(e.code()), false, e.what(), 0.0, {}};
        if (e.witness()) a.witness = "node " + std::to_string(*e.witness());
        res.report.assertions.push_back(std::move(a));
      }
    }
  }
  if (res.exit == kConfig) res.report.diagnostics["error"] = res.message;
  return res;
}

/// Parses a file and runs it; a top-level "scenarios" array runs as a
/// batch, concurrently. Writes reports under `out` when set.
struct FileOutcome {
  int exit = kPass;
  std::vector<std::pair<std::string, Result>> results;
};

inline FileOutcome run_file(const std::filesystem::path& path, const std::optional<std::string>& task,
                            const RunOptions& opt, const std::optional<std::filesystem::path>& out,
                            std::ostream& log) {
  FileOutcome fo;
  nlohmann::json cfg;
  {
    std::ifstream in(path);
    if (!in) {
      log << "config error: cannot open " << path.string() << '\n';
      fo.exit = kConfig;
      return fo;
    }
    try {
      cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      log << "config error: " << path.string() << ": " << e.what() << '\n';
      fo.exit = kConfig;
      return fo;
    }
  }
  std::vector<nlohmann::json> items;
  std::vector<std::string> stems;
  const std::string base = cfg.is_object() && cfg.contains("name") && cfg.at("name").is_string()
                               ? cfg.at("name").get<std::string>()
                               : path.stem().string();
  if (cfg.is_object() && cfg.contains("scenarios")) {
    std::size_t i = 0;
    for (auto item : cfg.at("scenarios")) {
      if (task && !item.contains("task")) item["task"] = *task;
      stems.push_back(item.is_object() && item.contains("name") && item.at("name").is_string()
                          ? item.at("name").get<std::string>()
                          : base + "_" + std::to_string(i));
      items.push_back(std::move(item));
      ++i;
    }
  } else {
    if (task) {
      if (cfg.is_object() && cfg.contains("task") && cfg.at("task") != *task) {
        log << "config error: task '" << *task << "' does not match config task " << cfg.at("task").dump() << '\n';
        fo.exit = kConfig;
        return fo;
      }
      if (cfg.is_object()) cfg["task"] = *task;
    }
    items.push_back(cfg);
    stems.push_back(base);
  }
  std::vector<std::future<Result>> jobs;
  for (const auto& item : items)
    jobs.push_back(std::async(std::launch::async, [item, opt] { return run(item, opt); }));
  bool any_config = false, any_fail = false;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    Result r = jobs[i].get();
    if (out) {
      try {
        report::write(r.report, *out, stems[i]);
      } catch (const std::exception& e) {
        log << "output error: " << e.what() << '\n';
        r.exit = kConfig;
      }
    }
    log << stems[i] << ": " << (r.exit == kPass ? "pass" : r.exit == kAssertion ? "FAIL" : "ERROR");
    if (!r.message.empty()) log << " (" << r.message << ")";
    log << '\n';
    for (const auto& a : r.report.assertions)
      if (!a.pass) log << "  failed: " << a.name << (a.witness.empty() ? "" : " at " + a.witness) << '\n';
    any_config = any_config || r.exit == kConfig;
    any_fail = any_fail || r.exit == kAssertion;
    fo.results.emplace_back(stems[i], std::move(r));
  }
  fo.exit = any_config ? kConfig : any_fail ? kAssertion : kPass;
  return fo;
}

}  // namespace glab::scenario
