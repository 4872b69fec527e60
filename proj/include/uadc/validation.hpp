#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uadc/harness.hpp"

namespace uadc {

inline constexpr int kCriteriaCount = 10;

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst observed margin quantity
  double threshold = 0.0;  // bound it is compared against
  std::string detail;
  double seconds = 0.0;    // wall time, kept out of every CSV
  double budget = 0.0;     // wall-time budget in seconds, 0 for none
};

struct ValidationOptions {
  std::uint64_t seed = 1;
  std::size_t grid_size = kDefaultGridSize;
  std::size_t trials = kDefaultTrials;
  std::size_t block_samples = kDefaultBlockSamples;
  // Multiplies the solved water level in the optimality spot check. Anything
  // other than 1 must make that check fail.
  double zeta_scale = 1.0;
  std::optional<int> only;
};

struct ValidationReport {
  std::vector<CriterionResult> criteria;
  std::map<std::string, Table> tables;  // file stem -> table

  bool all_passed() const;
  // One row per criterion: id, name, passed, measured, threshold, detail.
  Table summary() const;
  // Every CSV the run emits, keyed by file name.
  std::map<std::string, std::string> csv_files() const;
  void write(const std::filesystem::path& dir) const;
};

ValidationReport run_validation(const ValidationOptions& options);

// Single criteria, exposed for tests. Each appends its detail tables to `tables`.
CriterionResult check_closed_form(const ValidationOptions& o, std::map<std::string, Table>& tables);
CriterionResult check_eq_consistency(const ValidationOptions& o,
                                     std::map<std::string, Table>& tables);
CriterionResult check_water_level(const ValidationOptions& o, std::map<std::string, Table>& tables);
CriterionResult check_monte_carlo(const ValidationOptions& o, std::map<std::string, Table>& tables);
CriterionResult check_non_dithered(const ValidationOptions& o,
                                   std::map<std::string, Table>& tables);
CriterionResult check_pcm_comparison(const ValidationOptions& o,
                                     std::map<std::string, Table>& tables);
CriterionResult check_rate_search(const ValidationOptions& o, std::map<std::string, Table>& tables);
CriterionResult check_quantizer_stats(const ValidationOptions& o,
                                      std::map<std::string, Table>& tables);
CriterionResult check_structure(const ValidationOptions& o, std::map<std::string, Table>& tables);

}  // namespace uadc
