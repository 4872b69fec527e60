#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "uadc/design.hpp"
#include "uadc/simulate.hpp"
#include "uadc/spectra.hpp"

namespace uadc {

enum class ExperimentKind { sweep_bits, sweep_fs_at_rate, find_fr_vs_rate, single_design, validate };
std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

// A named PSD as it appears in a config file.
struct PsdSection {
  std::string name;  // label used in output tables; defaults to the kind
  PsdKind kind = PsdKind::rectangular;
  double f_nyq = 1.0;
  std::vector<PsdKnot> table;  // tabulated only
  bool bimodal = false;        // built-in two-mode table

  // Unit-power model.
  PsdModel build() const;
  std::string label() const;
};

struct SimulationSettings {
  bool enabled = false;
  std::size_t trials = kDefaultTrials;
  std::size_t block_samples = kDefaultBlockSamples;
  int oversample = 0;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::sweep_bits;
  std::vector<PsdSection> psds{PsdSection{}};
  // sweep_bits
  std::vector<double> bits{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> fs_ratios{0.5, 1.0, 2.0};
  // sweep_fs_at_rate
  double rate = 3.75;
  double fs_min = 0.75;
  double fs_max = 1.5;
  double fs_step = 0.0125;
  // find_fr_vs_rate
  std::vector<double> rates{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  // single_design; eta <= 0 selects the 0.25 b + 1.75 schedule
  double f_s = 1.0;
  double design_bits = 3.0;
  double eta = 0.0;
  bool dithered = true;

  SimulationSettings simulation;
  std::size_t grid_size = kDefaultGridSize;
  std::uint64_t seed = 1;
  std::string output;  // directory for emitted tables

  AdcConfig adc_for(double f_s_value, double bits_value) const;
};

// Throws std::invalid_argument when ranges are empty or rates non-positive.
void validate(const ExperimentSpec& spec);

// Plain table with typed cells, rendered to CSV with 12 significant digits.
using Cell = std::variant<double, long long, std::string>;
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

// Normalized TMSE versus bits per sample for each f_s / f_nyq. Theory rows
// always; dithered and non-dithered simulation rows for integer b when
// simulation is enabled. Invalid configurations become flagged rows.
Table sweep_bits(const ExperimentSpec& spec);

// Normalized TMSE versus f_s at a fixed rate budget R = f_s b (continuous b),
// proposed water-filling filter against the brickwall PCM baseline. Rows with
// integer b are flagged; with simulation enabled they get simulated values.
Table sweep_fs_at_rate(const ExperimentSpec& spec);

struct FrSearch {
  double rate = 0.0;
  double f_r = 0.0;          // refined minimizer (absolute frequency)
  double objective = 0.0;    // ntmse at f_r
  double coarse_f = 0.0;     // best coarse grid point
  double coarse_objective = 0.0;
  std::vector<double> coarse_grid;
  std::vector<double> coarse_values;  // +inf where the configuration is invalid
};

// Rate-budget search: coarse grid with step f_nyq/200 over (0, 1.5 f_nyq],
// then golden-section refinement to 1e-4 f_nyq around the coarse minimum.
// Plateaus resolve to the smallest minimizing f_s.
FrSearch search_fr(const PsdModel& psd, double rate, std::size_t grid_size = kDefaultGridSize);

// ntmse of the optimal design with b = rate / f_s; +inf when invalid.
double rate_objective(const PsdModel& psd, double rate, double f_s, std::size_t grid_size);

Table find_fr_vs_rate(const ExperimentSpec& spec);

// Theory report and a simulated summary for one configuration.
struct SingleDesign {
  FilterDesign design;
  TmseReport theory;
  std::optional<SimSummary> simulation;
};
SingleDesign single_design(const ExperimentSpec& spec);

SimConfig make_sim_config(const PsdModel& psd, const FilterDesign& design,
                          const SimulationSettings& settings, std::uint64_t seed, bool dithered);

}  // namespace uadc
