#include <cstdlib>
#include <iostream>
#include <string>

#include "glab/verify/acceptance.hpp"

int main(int argc, char** argv) {
  glab::acceptance::Options o;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--quick") o.quick = true;
    else if (a == "--seed" && i + 1 < argc) o.seed = std::strtoull(argv[++i], nullptr, 10);
    else if (a == "--verbose") continue;
    else {
      std::cerr << "usage: glab_acceptance [--quick] [--seed N] [--verbose]\n";
      return 1;
    }
  }
  bool verbose = false;
  for (int i = 1; i < argc; ++i) verbose = verbose || std::string(argv[i]) == "--verbose";
  const auto cs = glab::acceptance::run_all(o);
  int failed = 0;
  for (const auto& c : cs) {
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name;
    if (!c.pass || verbose) std::cout << "  " << c.detail.dump();
    std::cout << '\n';
    failed += !c.pass;
  }
  std::cout << (cs.size() - failed) << "/" << cs.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
