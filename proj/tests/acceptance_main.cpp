// Integration gate: runs every end-to-end check at its pinned tolerance and
// prints one line per criterion. Exits nonzero if any fails.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "gradiometer/acceptance.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed = gradiometer::kDefaultAcceptanceSeed;
  int threads = 4;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--seed" && i + 1 < argc) seed = std::strtoull(argv[++i], nullptr, 10);
    if (arg == "--threads" && i + 1 < argc) threads = std::atoi(argv[++i]);
  }

  bool all_pass = true;
  for (int id = 1; id <= 9; ++id) {
    gradiometer::CriterionResult r;
    try {
      r = gradiometer::run_criterion(id, seed, threads);
    } catch (const std::exception& ex) {
      r.id = id;
      r.name = gradiometer::acceptance_names()[static_cast<std::size_t>(id - 1)];
      r.pass = false;
      r.detail = std::string("exception: ") + ex.what();
    }
    std::printf("[%s] %d. %s: %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}
