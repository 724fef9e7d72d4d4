#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "glab/glab.hpp"

namespace {

void print_table(const glab::report::Report& r) {
  for (const auto& a : r.assertions) std::cout << (a.pass ? "PASS  " : "FAIL  ") << a.name << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"g-expectation lab on finite lattices"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool quick = false;

  for (const auto& task : glab::scenario::tasks()) {
    auto* sub = app.add_subcommand(task);
    if (task == "selftest") {
      sub->add_flag("--quick", quick, "smaller instance counts");
      sub->add_option("--seed", seed, "acceptance seed");
      sub->add_option("--config", config, "optional scenario file")->check(CLI::ExistingFile);
      sub->add_option("--out", out, "report directory");
      continue;
    }
    sub->add_option("--config", config, "scenario JSON file")->required();
    sub->add_option("--out", out, "report directory");
    sub->add_option("--seed", seed, "override the scenario seed");
    sub->add_option("--tol", tol, "override the scenario tolerance")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : glab::scenario::kConfig;
  }

  const std::string task = app.get_subcommands().front()->get_name();
  if (const char* env = std::getenv("GLAB_OUT"); env && *env) out = env;

  if (task == "selftest" && config.empty()) {
    auto r = glab::scenario::run_selftest(seed.value_or(glab::acceptance::Options{}.seed), quick);
    print_table(r.report);
    if (out) {
      try {
        glab::report::write(r.report, *out, "selftest");
      } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return glab::scenario::kConfig;
      }
    }
    return r.exit;
  }

  glab::scenario::RunOptions opt{seed, tol, quick};
  std::optional<std::filesystem::path> dir;
  if (out) dir = *out;
  auto r = glab::scenario::run_file(config, task, opt, dir, std::cerr);
  return r.exit;
}
