#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "uadc/design.hpp"
#include "uadc/harness.hpp"
#include "uadc/simulate.hpp"

namespace uadc {

using Json = nlohmann::ordered_json;

// "%.12g" for doubles, plain text otherwise; non-finite values print as nan/inf.
std::string format_cell(const Cell& cell);
std::string format_number(double value);
std::string to_csv(const Table& table);
void write_text(const std::filesystem::path& path, std::string_view text);
void write_csv(const Table& table, const std::filesystem::path& path);

// Numeric-looking fields come back as doubles, everything else as strings.
Table parse_csv(std::string_view text);
Table read_csv(const std::filesystem::path& path);

// Design document: config, zeta, grid, h2, g_re, g_im, tmse, ntmse, plus the
// dominant alias index and source frequency per grid point. h2 and G are taken
// at the dominant alias of each folded grid frequency.
Json design_to_json(const FilterDesign& design, const PsdModel& psd, const TmseReport& report);

Json tmse_to_json(const TmseReport& report);
Json summary_to_json(const SimSummary& summary, const SimConfig& sim, double ntmse_theory,
                     bool include_trials = true);

// Flat simulation row: f_s, b, eta, dithered, ntmse_theory, ntmse_sim, stderr, overload_frac.
Table simulation_table();
void append_simulation_row(Table& table, const SimConfig& sim, const SimSummary& summary,
                           double ntmse_theory);

// Experiment manifests. Unknown keys are rejected.
ExperimentSpec experiment_from_json(const Json& doc);
ExperimentSpec load_experiment(const std::filesystem::path& path);
PsdSection psd_from_json(const Json& doc);

// UADC_OUTPUT_DIR if set and non-empty, else "out".
std::filesystem::path default_output_dir();

}  // namespace uadc
