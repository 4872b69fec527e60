// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "uadc/validation.hpp"

int main(int argc, char** argv) {
  uadc::ValidationOptions options;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      options.only = std::atoi(argv[++i]);
    } else if (arg == "--seed" && i + 1 < argc) {
      options.seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: %s [--only N] [--seed S]\n", argv[0]);
      return 2;
    }
  }

  const uadc::ValidationReport report = uadc::run_validation(options);
  bool ok = true;
  for (const auto& c : report.criteria) {
    const bool in_budget = c.budget <= 0.0 || c.seconds < c.budget;
    const bool passed = c.passed && in_budget;
    ok = ok && passed;
    std::printf("[%s] criterion %d: %s | measured %.6g vs threshold %.6g | %s | %.2fs", passed ? "PASS" : "FAIL",
                c.id, c.name.c_str(), c.measured, c.threshold, c.detail.c_str(), c.seconds);
    if (c.budget > 0.0) std::printf(" (budget %.0fs)", c.budget);
    std::printf("\n");
  }
  return ok ? 0 : 1;
}
