#include "uadc/harness.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace uadc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_integer(double b) { return b >= 1.0 && std::abs(b - std::round(b)) < 1e-9; }

Cell empty() { return std::string{}; }

std::string mode_name(bool dithered) { return dithered ? "dithered" : "non_dithered"; }

std::vector<double> fs_grid(const ExperimentSpec& spec) {
  std::vector<double> out;
  const auto steps = static_cast<long>(std::floor((spec.fs_max - spec.fs_min) / spec.fs_step + 1e-9));
  for (long i = 0; i <= steps; ++i) out.push_back(spec.fs_min + static_cast<double>(i) * spec.fs_step);
  return out;
}

SimSummary simulate_design(const PsdModel& psd, FilterDesign design,
                           const SimulationSettings& settings, std::uint64_t seed, bool dithered) {
  design = recovery_filter(std::move(design), psd);
  return run_trials(make_sim_config(psd, design, settings, seed, dithered));
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::sweep_bits: return "sweep_bits";
    case ExperimentKind::sweep_fs_at_rate: return "sweep_fs_at_rate";
    case ExperimentKind::find_fr_vs_rate: return "find_fr_vs_rate";
    case ExperimentKind::single_design: return "single_design";
    case ExperimentKind::validate: return "validate";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::sweep_bits, ExperimentKind::sweep_fs_at_rate,
                 ExperimentKind::find_fr_vs_rate, ExperimentKind::single_design,
                 ExperimentKind::validate}) {
    if (name == to_string(k)) return k;
  }
  if (name == "bits") return ExperimentKind::sweep_bits;
  if (name == "rate") return ExperimentKind::sweep_fs_at_rate;
  if (name == "fr") return ExperimentKind::find_fr_vs_rate;
  throw std::invalid_argument("unknown experiment kind '" + std::string(name) + "'");
}

PsdModel PsdSection::build() const {
  if (bimodal) return make_bimodal_psd(f_nyq);
  if (kind == PsdKind::tabulated) return normalize_unit_power(PsdModel::tabulated(f_nyq, table));
  return make_unit_psd(kind, f_nyq);
}

std::string PsdSection::label() const {
  if (!name.empty()) return name;
  if (bimodal) return "bimodal";
  return std::string(to_string(kind));
}

AdcConfig ExperimentSpec::adc_for(double f_s_value, double bits_value) const {
  if (eta > 0.0) return {f_s_value, bits_value, eta};
  return scheduled_adc(f_s_value, bits_value);
}

void validate(const ExperimentSpec& spec) {
  if (spec.psds.empty()) throw std::invalid_argument("no PSD selected");
  if (spec.grid_size < 2) throw std::invalid_argument("grid size must be at least 2");
  switch (spec.kind) {
    case ExperimentKind::sweep_bits:
      if (spec.bits.empty() || spec.fs_ratios.empty()) {
        throw std::invalid_argument("bit and f_s ranges must be non-empty");
      }
      for (double b : spec.bits) {
        if (!(b > 0.0)) throw std::invalid_argument("bit depths must be positive");
        if (spec.simulation.enabled && !is_integer(b)) {
          throw std::invalid_argument("simulation needs integer bit depths");
        }
      }
      for (double r : spec.fs_ratios) {
        if (!(r > 0.0)) throw std::invalid_argument("f_s ratios must be positive");
      }
      break;
    case ExperimentKind::sweep_fs_at_rate:
      if (!(spec.rate > 0.0)) throw std::invalid_argument("rate budget must be positive");
      if (!(spec.fs_min > 0.0) || !(spec.fs_step > 0.0) || spec.fs_max < spec.fs_min) {
        throw std::invalid_argument("f_s grid must be a non-empty positive range");
      }
      break;
    case ExperimentKind::find_fr_vs_rate:
      if (spec.rates.empty()) throw std::invalid_argument("rate grid must be non-empty");
      for (double r : spec.rates) {
        if (!(r > 0.0)) throw std::invalid_argument("rates must be positive");
      }
      break;
    case ExperimentKind::single_design:
      if (!(spec.f_s > 0.0) || !(spec.design_bits > 0.0)) {
        throw std::invalid_argument("f_s and b must be positive");
      }
      break;
    case ExperimentKind::validate:
      break;
  }
}

SimConfig make_sim_config(const PsdModel& psd, const FilterDesign& design,
                          const SimulationSettings& settings, std::uint64_t seed, bool dithered) {
  SimConfig sim{psd, design};
  sim.oversample = settings.oversample;
  sim.block_samples = settings.block_samples;
  sim.trials = settings.trials;
  sim.seed = seed;
  sim.dithered = dithered;
  return sim;
}

Table sweep_bits(const ExperimentSpec& spec) {
  validate(spec);
  Table t;
  t.header = {"psd",      "f_s",    "b",      "eta",           "mode",
              "ntmse_theory", "ntmse_sim", "stderr", "overload_frac", "status"};
  for (const auto& section : spec.psds) {
    const PsdModel psd = section.build();
    for (double ratio : spec.fs_ratios) {
      const double f_s = ratio * psd.f_nyq();
      const FoldedSpectrum folded = fold(psd, f_s, spec.grid_size);
      for (double b : spec.bits) {
        const AdcConfig adc = spec.adc_for(f_s, b);
        auto row = [&](std::string mode, Cell theory, Cell sim, Cell se, Cell overload,
                       std::string status) {
          t.rows.push_back({section.label(), f_s, b, adc.eta, std::move(mode), std::move(theory),
                            std::move(sim), std::move(se), std::move(overload), std::move(status)});
        };
        double theory = 0.0;
        try {
          theory = tmse_optimal(folded, psd, adc).ntmse;
        } catch (const InvalidConfigError& e) {
          row("theory", empty(), empty(), empty(), empty(), std::string("invalid: ") + e.what());
          continue;
        }
        row("theory", theory, empty(), empty(), empty(), "ok");
        if (!spec.simulation.enabled) continue;
        const FilterDesign design = optimal_prefilter(folded, psd, adc);
        for (bool dithered : {true, false}) {
          const SimSummary s = simulate_design(psd, design, spec.simulation, spec.seed, dithered);
          row(mode_name(dithered), theory, s.ntmse, s.stderr_ntmse, s.overload_fraction, "ok");
        }
      }
    }
  }
  return t;
}

Table sweep_fs_at_rate(const ExperimentSpec& spec) {
  validate(spec);
  Table t;
  t.header = {"psd",          "f_s",       "b",      "eta",    "method",
              "integer_b",    "ntmse_theory", "ntmse_sim", "stderr", "status"};
  const std::vector<double> grid = fs_grid(spec);
  for (const auto& section : spec.psds) {
    const PsdModel psd = section.build();
    // Continuous-b curves first, then the integer-b points with simulation.
    for (int pass = 0; pass < 2; ++pass) {
      for (double ratio : grid) {
        const double f_s = ratio * psd.f_nyq();
        const double b = spec.rate * psd.f_nyq() / f_s;
        const bool integral = is_integer(b);
        if (pass == 1 && !(integral && spec.simulation.enabled)) continue;
        const double b_used = (pass == 1) ? std::round(b) : b;
        const AdcConfig adc = spec.adc_for(f_s, b_used);
        const long long flag = integral ? 1 : 0;
        auto row = [&](std::string method, Cell theory, Cell sim, Cell se, std::string status) {
          t.rows.push_back({section.label(), f_s, b_used, adc.eta, std::move(method), flag,
                            std::move(theory), std::move(sim), std::move(se), std::move(status)});
        };
        const FoldedSpectrum folded = fold(psd, f_s, spec.grid_size);
        double proposed = 0.0;
        TmseReport pcm;
        try {
          proposed = tmse_optimal(folded, psd, adc).ntmse;
          pcm = tmse_pcm_baseline(psd, adc, spec.grid_size);
        } catch (const InvalidConfigError& e) {
          const std::string status = std::string("invalid: ") + e.what();
          row("proposed", empty(), empty(), empty(), status);
          row("pcm", empty(), empty(), empty(), status);
          continue;
        }
        const std::string pcm_status = pcm.extrapolated ? "extrapolated" : "ok";
        if (pass == 0) {
          row("proposed", proposed, empty(), empty(), "ok");
          row("pcm", pcm.ntmse, empty(), empty(), pcm_status);
          continue;
        }
        const SimSummary sp = simulate_design(psd, optimal_prefilter(folded, psd, adc),
                                              spec.simulation, spec.seed, true);
        row("proposed", proposed, sp.ntmse, sp.stderr_ntmse, "ok");
        const FilterDesign pcm_design =
            make_design(pcm_baseline_prefilter(psd, f_s), folded, psd, adc);
        const SimSummary sb = simulate_design(psd, pcm_design, spec.simulation, spec.seed, true);
        row("pcm", pcm.ntmse, sb.ntmse, sb.stderr_ntmse, pcm_status);
      }
    }
  }
  return t;
}

double rate_objective(const PsdModel& psd, double rate, double f_s, std::size_t grid_size) {
  try {
    const AdcConfig adc = scheduled_adc(f_s, rate * psd.f_nyq() / f_s);
    return tmse_optimal(fold(psd, f_s, grid_size), psd, adc).ntmse;
  } catch (const InvalidConfigError&) {
    return kInf;
  }
}

FrSearch search_fr(const PsdModel& psd, double rate, std::size_t grid_size) {
  if (!(rate > 0.0)) throw std::invalid_argument("rate budget must be positive");
  constexpr int kCoarseSteps = 300;  // 1.5 f_nyq / (f_nyq / 200)
  const double step = psd.f_nyq() / 200.0;
  FrSearch out;
  out.rate = rate;
  out.coarse_grid.reserve(kCoarseSteps);
  out.coarse_values.reserve(kCoarseSteps);
  int best = -1;
  for (int j = 1; j <= kCoarseSteps; ++j) {
    const double f = j * step;
    const double v = rate_objective(psd, rate, f, grid_size);
    out.coarse_grid.push_back(f);
    out.coarse_values.push_back(v);
    if (best < 0 || v < out.coarse_values[static_cast<std::size_t>(best)]) best = j - 1;
  }
  const auto bi = static_cast<std::size_t>(best);
  out.coarse_f = out.coarse_grid[bi];
  out.coarse_objective = out.coarse_values[bi];
  out.f_r = out.coarse_f;
  out.objective = out.coarse_objective;
  if (!std::isfinite(out.coarse_objective)) return out;

  double lo = bi == 0 ? 0.5 * step : out.coarse_grid[bi - 1];
  double hi = bi + 1 < out.coarse_grid.size() ? out.coarse_grid[bi + 1] : out.coarse_grid[bi];
  const double tol = 1e-4 * psd.f_nyq();
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = rate_objective(psd, rate, c, grid_size);
  double fd = rate_objective(psd, rate, d, grid_size);
  while (hi - lo > tol) {
    // Ties move toward the lower end so plateaus resolve to the smallest f_s.
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = rate_objective(psd, rate, c, grid_size);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = rate_objective(psd, rate, d, grid_size);
    }
  }
  const double candidate = 0.5 * (lo + hi);
  const double value = rate_objective(psd, rate, candidate, grid_size);
  if (value < out.coarse_objective) {
    out.f_r = candidate;
    out.objective = value;
  }
  return out;
}

Table find_fr_vs_rate(const ExperimentSpec& spec) {
  validate(spec);
  Table t;
  t.header = {"psd", "rate", "f_r", "f_r_ratio", "b", "ntmse", "coarse_f", "coarse_ntmse"};
  for (const auto& section : spec.psds) {
    const PsdModel psd = section.build();
    for (double rate : spec.rates) {
      const FrSearch s = search_fr(psd, rate, spec.grid_size);
      t.rows.push_back({section.label(), rate, s.f_r, s.f_r / psd.f_nyq(),
                        rate * psd.f_nyq() / s.f_r, s.objective, s.coarse_f, s.coarse_objective});
    }
  }
  return t;
}

SingleDesign single_design(const ExperimentSpec& spec) {
  validate(spec);
  const PsdModel psd = spec.psds.front().build();
  const AdcConfig adc = spec.adc_for(spec.f_s, spec.design_bits);
  const FoldedSpectrum folded = fold(psd, spec.f_s, spec.grid_size);
  FilterDesign design = recovery_filter(optimal_prefilter(folded, psd, adc), psd);
  TmseReport theory = tmse_at_level(folded, psd, adc, design.zeta);
  std::optional<SimSummary> simulation;
  if (spec.simulation.enabled) {
    simulation = run_trials(make_sim_config(psd, design, spec.simulation, spec.seed, spec.dithered));
  }
  return {std::move(design), theory, std::move(simulation)};
}

}  // namespace uadc
