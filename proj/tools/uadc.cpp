#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uadc/design.hpp"
#include "uadc/harness.hpp"
#include "uadc/report_io.hpp"
#include "uadc/simulate.hpp"
#include "uadc/validation.hpp"

namespace fs = std::filesystem;
using namespace uadc;

namespace {

// Flags shared by every verb. Each mirrors a config key; a flag given on the
// command line wins over the config file.
struct CommonFlags {
  std::string config;
  std::string psd;
  double f_nyq = 1.0;
  double f_s = 1.0;
  double bits = 3.0;
  double eta = 0.0;
  std::size_t grid_size = kDefaultGridSize;
  std::uint64_t seed = 1;
  std::string output;
  std::size_t trials = kDefaultTrials;
  std::size_t block = kDefaultBlockSamples;
  int oversample = 0;

  CLI::Option* o_psd = nullptr;
  CLI::Option* o_f_nyq = nullptr;
  CLI::Option* o_f_s = nullptr;
  CLI::Option* o_bits = nullptr;
  CLI::Option* o_eta = nullptr;
  CLI::Option* o_grid = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_output = nullptr;
  CLI::Option* o_trials = nullptr;
  CLI::Option* o_block = nullptr;
  CLI::Option* o_oversample = nullptr;
};

void add_common(CLI::App* app, CommonFlags& f, bool stochastic) {
  app->add_option("--config", f.config, "JSON experiment manifest")->check(CLI::ExistingFile);
  f.o_psd = app->add_option("--psd", f.psd,
                            "PSD kind: rectangular, triangular, gaussian3db, bimodal");
  f.o_f_nyq = app->add_option("--f-nyq", f.f_nyq, "two-sided PSD support width");
  f.o_f_s = app->add_option("--fs", f.f_s, "sampling rate");
  f.o_bits = app->add_option("--bits", f.bits, "bits per sample");
  f.o_eta = app->add_option("--eta", f.eta, "overload factor (default 0.25 b + 1.75)");
  f.o_grid = app->add_option("--grid-size", f.grid_size, "folded frequency grid points");
  f.o_output = app->add_option("--output", f.output, "output path or directory");
  if (stochastic) {
    f.o_seed = app->add_option("--seed", f.seed, "random seed");
    f.o_trials = app->add_option("--trials", f.trials, "Monte Carlo trials");
    f.o_block = app->add_option("--block", f.block, "ADC samples per trial");
    f.o_oversample = app->add_option("--oversample", f.oversample, "dense grid factor L");
  }
}

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

ExperimentSpec resolve(const CommonFlags& f) {
  ExperimentSpec spec = f.config.empty() ? ExperimentSpec{} : load_experiment(f.config);
  if (given(f.o_psd) || given(f.o_f_nyq)) {
    PsdSection section = spec.psds.empty() ? PsdSection{} : spec.psds.front();
    if (given(f.o_psd)) section = psd_from_json(Json(f.psd));
    section.f_nyq = given(f.o_f_nyq) ? f.f_nyq : section.f_nyq;
    spec.psds = {section};
  }
  if (given(f.o_f_s)) spec.f_s = f.f_s;
  if (given(f.o_bits)) spec.design_bits = f.bits;
  if (given(f.o_eta)) spec.eta = f.eta;
  if (given(f.o_grid)) spec.grid_size = f.grid_size;
  if (given(f.o_seed)) spec.seed = f.seed;
  if (given(f.o_output)) spec.output = f.output;
  if (given(f.o_trials)) spec.simulation.trials = f.trials;
  if (given(f.o_block)) spec.simulation.block_samples = f.block;
  if (given(f.o_oversample)) spec.simulation.oversample = f.oversample;
  return spec;
}

fs::path output_dir(const ExperimentSpec& spec) {
  return spec.output.empty() ? default_output_dir() : fs::path(spec.output);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
    std::cerr << "wrote " << path << '\n';
  }
}

int run_design(const CommonFlags& f) {
  ExperimentSpec spec = resolve(f);
  spec.kind = ExperimentKind::single_design;
  const SingleDesign d = single_design(spec);
  emit(design_to_json(d.design, spec.psds.front().build(), d.theory).dump(2) + "\n", spec.output);
  return 0;
}

int run_tmse(const CommonFlags& f, const std::string& method) {
  ExperimentSpec spec = resolve(f);
  spec.kind = ExperimentKind::single_design;
  validate(spec);
  const PsdModel psd = spec.psds.front().build();
  const AdcConfig adc = spec.adc_for(spec.f_s, spec.design_bits);
  TmseReport report;
  if (method == "proposed") {
    report = tmse_optimal(fold(psd, spec.f_s, spec.grid_size), psd, adc);
  } else if (method == "pcm") {
    report = tmse_pcm_baseline(psd, adc, spec.grid_size);
  } else if (method == "closed-form") {
    report = closed_form_rectangular(adc, psd.f_nyq(), ClosedFormVariant::proposed);
  } else if (method == "closed-form-pcm") {
    report = closed_form_rectangular(adc, psd.f_nyq(), ClosedFormVariant::pcm, kNonUniformGaussianCq);
  } else {
    report = closed_form_rectangular(adc, psd.f_nyq(), ClosedFormVariant::adx);
  }
  emit(tmse_to_json(report).dump(2) + "\n", spec.output);
  return 0;
}

int run_simulate(const CommonFlags& f, bool non_dithered, bool both, bool with_trials) {
  ExperimentSpec spec = resolve(f);
  spec.kind = ExperimentKind::single_design;
  spec.simulation.enabled = true;
  if (non_dithered) spec.dithered = false;
  validate(spec);
  const PsdModel psd = spec.psds.front().build();
  const AdcConfig adc = spec.adc_for(spec.f_s, spec.design_bits);
  const FoldedSpectrum folded = fold(psd, spec.f_s, spec.grid_size);
  const FilterDesign design = recovery_filter(optimal_prefilter(folded, psd, adc), psd);
  const double theory = tmse_at_level(folded, psd, adc, design.zeta).ntmse;

  Table table = simulation_table();
  Json records = Json::array();
  std::vector<bool> modes = both ? std::vector<bool>{true, false} : std::vector<bool>{spec.dithered};
  for (bool dithered : modes) {
    const SimConfig sim = make_sim_config(psd, design, spec.simulation, spec.seed, dithered);
    const SimSummary s = run_trials(sim);
    append_simulation_row(table, sim, s, theory);
    records.push_back(summary_to_json(s, sim, theory, with_trials));
  }
  if (spec.output.empty()) {
    std::cout << to_csv(table);
  } else {
    const fs::path dir = spec.output;
    write_csv(table, dir / "simulation.csv");
    write_text(dir / "simulation.json", records.dump(2) + "\n");
    std::cerr << "wrote " << (dir / "simulation.csv").string() << '\n';
  }
  return 0;
}

int run_sweep(const CommonFlags& f, const std::string& kind, bool simulate,
              const std::vector<std::string>& psds, const std::vector<double>& bits,
              const std::vector<double>& ratios, const std::vector<double>& rates,
              std::optional<double> rate) {
  ExperimentSpec spec = resolve(f);
  if (!kind.empty()) spec.kind = parse_experiment_kind(kind);
  if (simulate) spec.simulation.enabled = true;
  if (!psds.empty()) {
    spec.psds.clear();
    for (const auto& p : psds) {
      PsdSection s = psd_from_json(Json(p));
      if (given(f.o_f_nyq)) s.f_nyq = f.f_nyq;
      spec.psds.push_back(s);
    }
  }
  if (!bits.empty()) spec.bits = bits;
  if (!ratios.empty()) spec.fs_ratios = ratios;
  if (!rates.empty()) spec.rates = rates;
  if (rate) spec.rate = *rate;

  Table table;
  std::string stem;
  switch (spec.kind) {
    case ExperimentKind::sweep_bits:
      table = sweep_bits(spec);
      stem = "sweep_bits";
      break;
    case ExperimentKind::sweep_fs_at_rate:
      table = sweep_fs_at_rate(spec);
      stem = "sweep_fs_at_rate";
      break;
    case ExperimentKind::find_fr_vs_rate:
      table = find_fr_vs_rate(spec);
      stem = "find_fr_vs_rate";
      break;
    default:
      throw std::invalid_argument("sweep handles sweep_bits, sweep_fs_at_rate and find_fr_vs_rate");
  }
  const fs::path path = output_dir(spec) / (stem + ".csv");
  write_csv(table, path);
  std::cerr << "wrote " << path.string() << " (" << table.rows.size() << " rows)\n";
  return 0;
}

int run_validate(const CommonFlags& f, std::optional<int> only, double zeta_scale) {
  ExperimentSpec spec = resolve(f);
  ValidationOptions o;
  o.seed = spec.seed;
  o.grid_size = spec.grid_size;
  o.trials = spec.simulation.trials;
  o.block_samples = spec.simulation.block_samples;
  o.zeta_scale = zeta_scale;
  o.only = only;
  const ValidationReport report = run_validation(o);
  for (const auto& c : report.criteria) {
    std::printf("criterion %2d %s  %s  measured=%.6g threshold=%.6g  %s\n", c.id,
                c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.threshold,
                c.detail.c_str());
  }
  const fs::path dir = output_dir(spec) / "validate";
  report.write(dir);
  std::fprintf(stderr, "wrote %s\n", dir.string().c_str());
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-constrained sampling and quantization design toolkit"};
  app.require_subcommand(1);

  CommonFlags design_flags;
  auto* design = app.add_subcommand("design", "emit the optimal filter pair as JSON");
  add_common(design, design_flags, false);

  CommonFlags tmse_flags;
  std::string method = "proposed";
  auto* tmse = app.add_subcommand("tmse", "evaluate the theoretical time-averaged MSE");
  add_common(tmse, tmse_flags, false);
  tmse->add_option("--method", method, "proposed, pcm, closed-form, closed-form-pcm, adx")
      ->check(CLI::IsMember({"proposed", "pcm", "closed-form", "closed-form-pcm", "adx"}));

  CommonFlags sim_flags;
  bool non_dithered = false;
  bool both = false;
  bool with_trials = false;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of the acquisition chain");
  add_common(simulate, sim_flags, true);
  simulate->add_flag("--no-dither", non_dithered, "quantize without dither");
  simulate->add_flag("--both", both, "run dithered and non-dithered");
  simulate->add_flag("--per-trial", with_trials, "include per-trial records in the JSON");

  CommonFlags sweep_flags;
  std::string kind;
  bool sweep_sim = false;
  std::vector<std::string> psds;
  std::vector<double> bits;
  std::vector<double> ratios;
  std::vector<double> rates;
  std::optional<double> rate;
  auto* sweep = app.add_subcommand("sweep", "parameter sweeps and rate-budget search");
  add_common(sweep, sweep_flags, true);
  sweep->add_option("--kind", kind, "sweep_bits, sweep_fs_at_rate or find_fr_vs_rate");
  sweep->add_flag("--simulate", sweep_sim, "add Monte Carlo rows at integer b");
  sweep->add_option("--psds", psds, "PSD kinds to sweep")->delimiter(',');
  sweep->add_option("--bit-list", bits, "bits per sample")->delimiter(',');
  sweep->add_option("--fs-ratios", ratios, "f_s / f_nyq values")->delimiter(',');
  sweep->add_option("--rates", rates, "rate budgets in bits per Nyquist interval")->delimiter(',');
  sweep->add_option("--rate", rate, "rate budget for sweep_fs_at_rate");

  CommonFlags validate_flags;
  std::optional<int> only;
  double zeta_scale = 1.0;
  auto* validate_cmd = app.add_subcommand("validate", "run the acceptance suite");
  add_common(validate_cmd, validate_flags, true);
  validate_cmd->add_option("--only", only, "run one criterion (1-10)");
  validate_cmd->add_option("--zeta-scale", zeta_scale,
                           "scale the solved water level in the optimality spot check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*design) return run_design(design_flags);
    if (*tmse) return run_tmse(tmse_flags, method);
    if (*simulate) return run_simulate(sim_flags, non_dithered, both, with_trials);
    if (*sweep) return run_sweep(sweep_flags, kind, sweep_sim, psds, bits, ratios, rates, rate);
    if (*validate_cmd) return run_validate(validate_flags, only, zeta_scale);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
