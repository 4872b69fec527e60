#include "uadc/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

#include "uadc/report_io.hpp"

namespace uadc {

namespace {

constexpr double kRelTol = 1e-9;
constexpr double kLevelTol = 1e-10;

const std::vector<double> kFsRatios{0.5, 1.0, 2.0};

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

struct NamedPsd {
  std::string name;
  PsdModel model;
};

std::vector<NamedPsd> study_psds() {
  return {{"rectangular", make_unit_psd(PsdKind::rectangular, 1.0)},
          {"triangular", make_unit_psd(PsdKind::triangular, 1.0)},
          {"gaussian3db", make_unit_psd(PsdKind::gaussian3db, 1.0)}};
}

CriterionResult start(int id, std::string name) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

CriterionResult finish(CriterionResult r, double measured, double threshold, bool passed,
                       std::string detail) {
  r.measured = measured;
  r.threshold = threshold;
  r.passed = passed;
  r.detail = std::move(detail);
  return r;
}

// Index of the alias carrying the most density at folded frequency f, by
// direct search over every alias whose source frequency is inside the band.
// Ties go to the smallest |k|, then to positive k.
int brute_force_dominant(const PsdModel& psd, double f, double f_s) {
  const int reach = static_cast<int>(std::ceil(psd.f_nyq() / f_s)) + 2;
  int best = 0;
  double best_density = psd(f);
  for (int m = 1; m <= reach; ++m) {
    for (int k : {m, -m}) {
      const double d = psd(f - k * f_s);
      if (d > best_density) {
        best = k;
        best_density = d;
      }
    }
  }
  return best;
}

const Table& monte_carlo_table(const ValidationOptions& o, std::map<std::string, Table>& tables) {
  static const std::string key = "validation_monte_carlo";
  if (auto it = tables.find(key); it != tables.end()) return it->second;
  Table t;
  t.header = {"f_s",    "b",         "eta",    "ntmse_theory", "ntmse_dithered", "stderr_dithered",
              "ntmse_non_dithered", "stderr_non_dithered", "overload_dithered",
              "overload_non_dithered"};
  const PsdModel psd = make_unit_psd(PsdKind::rectangular, 1.0);
  SimulationSettings settings;
  settings.enabled = true;
  settings.trials = o.trials;
  settings.block_samples = o.block_samples;
  for (double ratio : kFsRatios) {
    const FoldedSpectrum folded = fold(psd, ratio, o.grid_size);
    for (double b : {2.0, 3.0, 4.0, 6.0}) {
      const AdcConfig adc = scheduled_adc(ratio, b);
      const FilterDesign design = recovery_filter(optimal_prefilter(folded, psd, adc), psd);
      const double theory = tmse_at_level(folded, psd, adc, design.zeta).ntmse;
      const SimSummary d = run_trials(make_sim_config(psd, design, settings, o.seed, true));
      const SimSummary n = run_trials(make_sim_config(psd, design, settings, o.seed, false));
      t.rows.push_back({ratio, b, adc.eta, theory, d.ntmse, d.stderr_ntmse, n.ntmse,
                        n.stderr_ntmse, d.overload_fraction, n.overload_fraction});
    }
  }
  return tables.emplace(key, std::move(t)).first->second;
}

double num(const Cell& c) { return std::get<double>(c); }

}  // namespace

CriterionResult check_closed_form(const ValidationOptions& o, std::map<std::string, Table>& tables) {
  CriterionResult r = start(1, "closed-form consistency, rectangular PSD");
  r.budget = 1.0;
  Table t;
  t.header = {"f_s", "b", "eta", "ntmse_numeric", "ntmse_closed_form", "rel_err"};
  const PsdModel psd = make_unit_psd(PsdKind::rectangular, 1.0);
  double worst = 0.0;
  for (double ratio : kFsRatios) {
    const FoldedSpectrum folded = fold(psd, ratio, o.grid_size);
    for (int b = 1; b <= 8; ++b) {
      const AdcConfig adc = scheduled_adc(ratio, b);
      const double numeric = tmse_optimal(folded, psd, adc).ntmse;
      const double closed = closed_form_rectangular(adc, 1.0, ClosedFormVariant::proposed).ntmse;
      const double e = rel_err(numeric, closed);
      worst = std::max(worst, e);
      t.rows.push_back({ratio, static_cast<double>(b), adc.eta, numeric, closed, e});
    }
  }
  tables["validation_closed_form"] = std::move(t);
  return finish(r, worst, kRelTol, worst <= kRelTol, "24 cells, worst relative error");
}

CriterionResult check_eq_consistency(const ValidationOptions& o,
                                     std::map<std::string, Table>& tables) {
  CriterionResult r = start(2, "generic TMSE at the optimal filter equals the closed expression");
  r.budget = 5.0;
  Table t;
  t.header = {"psd", "f_s", "b", "ntmse_generic", "ntmse_optimal", "rel_err"};
  double worst = 0.0;
  for (const auto& [name, psd] : study_psds()) {
    for (double ratio : {0.5, 1.0}) {
      const FoldedSpectrum folded = fold(psd, ratio, o.grid_size);
      for (double b : {1.0, 3.0, 6.0}) {
        const AdcConfig adc = scheduled_adc(ratio, b);
        const FilterDesign design = optimal_prefilter(folded, psd, adc);
        const double generic = tmse_for_prefilter(design.h2, psd, adc).ntmse;
        const double optimal = tmse_at_level(folded, psd, adc, design.zeta).ntmse;
        const double e = rel_err(generic, optimal);
        worst = std::max(worst, e);
        t.rows.push_back({name, ratio, b, generic, optimal, e});
      }
    }
  }
  tables["validation_consistency"] = std::move(t);
  return finish(r, worst, kRelTol, worst <= kRelTol, "18 cells, worst relative error");
}

CriterionResult check_water_level(const ValidationOptions& o, std::map<std::string, Table>& tables) {
  CriterionResult r = start(3, "water-filling constraint residual");
  Table t;
  t.header = {"psd", "f_s", "b", "zeta", "residual"};
  double worst = 0.0;
  auto record = [&](const std::string& name, const PsdModel& psd, double ratio, double b) {
    const FoldedSpectrum folded = fold(psd, ratio, o.grid_size);
    const AdcConfig adc = scheduled_adc(ratio, b);
    const double zeta = solve_zeta(folded, adc);
    const double residual = std::abs(water_filling_constraint(folded, adc, zeta) - 1.0);
    worst = std::max(worst, residual);
    t.rows.push_back({name, ratio, b, zeta, residual});
  };
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  for (double ratio : kFsRatios) {
    for (int b = 1; b <= 8; ++b) record("rectangular", rect, ratio, b);
  }
  for (const auto& [name, psd] : study_psds()) {
    for (double ratio : {0.5, 1.0}) {
      for (double b : {1.0, 3.0, 6.0}) record(name, psd, ratio, b);
    }
  }
  tables["validation_water_level"] = std::move(t);
  return finish(r, worst, kLevelTol, worst <= kLevelTol, "42 solves, worst |constraint - 1|");
}

CriterionResult check_monte_carlo(const ValidationOptions& o, std::map<std::string, Table>& tables) {
  CriterionResult r = start(4, "Monte Carlo matches theory, rectangular PSD, dithered");
  r.budget = 120.0;
  const Table& t = monte_carlo_table(o, tables);
  double worst_ratio = 0.0;  // |sim - theory| / allowed band
  std::string worst_cell;
  for (const auto& row : t.rows) {
    const double theory = num(row[3]);
    const double sim = num(row[4]);
    const double se = num(row[5]);
    const double band = std::max(0.03 * theory, 3.0 * se);
    const double ratio = std::abs(sim - theory) / band;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_cell = fmt("f_s=%g b=%g", num(row[0]), num(row[1]));
    }
  }
  return finish(r, worst_ratio, 1.0, worst_ratio <= 1.0,
                "|sim - theory| / max(3% theory, 3 se), worst at " + worst_cell);
}

CriterionResult check_non_dithered(const ValidationOptions& o,
                                   std::map<std::string, Table>& tables) {
  CriterionResult r = start(5, "non-dithered quantizer does not lose to dithered");
  const Table& t = monte_carlo_table(o, tables);
  double worst = -std::numeric_limits<double>::infinity();  // (non - dith) / (2 se)
  std::string worst_cell;
  for (const auto& row : t.rows) {
    const double dith = num(row[4]);
    const double se = num(row[5]);
    const double non = num(row[6]);
    const double excess = (non - dith) / (2.0 * se);
    if (excess > worst) {
      worst = excess;
      worst_cell = fmt("f_s=%g b=%g", num(row[0]), num(row[1]));
    }
  }
  return finish(r, worst, 1.0, worst <= 1.0,
                "(non-dithered - dithered) / (2 se), worst at " + worst_cell);
}

CriterionResult check_pcm_comparison(const ValidationOptions& o,
                                     std::map<std::string, Table>& tables) {
  CriterionResult r = start(6, "water-filling beats brickwall PCM at R=3.75, sub-Nyquist optimum");
  r.budget = 10.0;
  ExperimentSpec spec;
  spec.kind = ExperimentKind::sweep_fs_at_rate;
  spec.psds.assign(2, PsdSection{});
  spec.psds[0].name = "triangular";
  spec.psds[0].kind = PsdKind::triangular;
  spec.psds[1].name = "gaussian3db";
  spec.psds[1].kind = PsdKind::gaussian3db;
  spec.grid_size = o.grid_size;
  spec.seed = o.seed;
  const Table t = sweep_fs_at_rate(spec);
  bool passed = true;
  double worst_margin = -std::numeric_limits<double>::infinity();  // min proposed - min pcm
  std::string detail;
  for (const auto& section : spec.psds) {
    double best_prop = std::numeric_limits<double>::infinity();
    double best_pcm = best_prop;
    double arg_prop = 0.0;
    double arg_pcm = 0.0;
    for (const auto& row : t.rows) {
      if (std::get<std::string>(row[0]) != section.name) continue;
      if (!std::holds_alternative<double>(row[6])) continue;
      const double v = num(row[6]);
      const bool proposed = std::get<std::string>(row[4]) == "proposed";
      double& best = proposed ? best_prop : best_pcm;
      double& arg = proposed ? arg_prop : arg_pcm;
      if (v < best) {
        best = v;
        arg = num(row[1]);
      }
    }
    const double margin = best_prop - best_pcm;
    worst_margin = std::max(worst_margin, margin);
    passed = passed && margin <= 0.0 && arg_prop < 1.0;
    if (!detail.empty()) detail += "; ";
    detail += section.name + fmt(": min proposed %.9g at f_s=%g", best_prop, arg_prop) +
              fmt(", min pcm %.9g at f_s=%g", best_pcm, arg_pcm);
  }
  tables["validation_rate_budget"] = t;
  return finish(r, worst_margin, 0.0, passed, detail);
}

CriterionResult check_rate_search(const ValidationOptions& o, std::map<std::string, Table>& tables) {
  CriterionResult r = start(7, "rate-budget optimal sampling rate");
  r.budget = 30.0;
  Table t;
  t.header = {"psd", "rate", "f_r_ratio", "ntmse", "target", "passed"};
  bool passed = true;
  double worst_rect = 0.0;
  std::string failures;
  for (const auto& [name, psd] : study_psds()) {
    const bool rect = psd.kind() == PsdKind::rectangular;
    const std::vector<double> rates =
        rect ? std::vector<double>{0.5, 1.0, 2.0, 3.0, 4.0, 5.0} : std::vector<double>{0.25, 0.5, 1.0};
    for (double rate : rates) {
      const FrSearch s = search_fr(psd, rate, o.grid_size);
      const double ratio = s.f_r / psd.f_nyq();
      bool ok = false;
      if (rect) {
        worst_rect = std::max(worst_rect, std::abs(ratio - 1.0));
        ok = std::abs(ratio - 1.0) <= 1e-3;
      } else {
        ok = ratio < 1.0;
      }
      if (!ok) failures += " " + name + fmt("@R=%g->%.6g", rate, ratio);
      passed = passed && ok;
      t.rows.push_back({name, rate, ratio, s.objective, std::string(rect ? "1+-1e-3" : "<1"),
                        static_cast<long long>(ok ? 1 : 0)});
    }
  }
  tables["validation_fr_search"] = std::move(t);
  return finish(r, worst_rect, 1e-3, passed,
                failures.empty() ? "all rates on target" : "off target:" + failures);
}

CriterionResult check_quantizer_stats(const ValidationOptions& o,
                                      std::map<std::string, Table>& tables) {
  CriterionResult r = start(8, "dithered quantization error moments");
  constexpr std::size_t n = 1'000'000;
  // Wide overload factor so the Gaussian input essentially never overloads.
  const AdcConfig adc{1.0, 4.0, 6.0};
  const QuantizerSpec q = dynamic_range(adc, 1.0, true);
  Rng input_rng = derive_stream(o.seed, 0, kProcessLane);
  Rng dither_rng = derive_stream(o.seed, 0, kDitherLane);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(n);
  for (double& v : y) v = normal(input_rng);
  const QuantizedBlock z = quantize_stream(q, y, dither_rng);

  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = z.samples[i] - y[i];
  const double target0 = q.delta() * q.delta() / 4.0;
  std::vector<double> lag(kErrorLags, 0.0);
  std::vector<double> lag_se(kErrorLags, 0.0);
  for (std::size_t l = 0; l < kErrorLags; ++l) {
    const std::size_t count = n - l;
    double s = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double p = e[i] * e[i + l];
      s += p;
      s2 += p * p;
    }
    const double mean = s / static_cast<double>(count);
    lag[l] = mean;
    lag_se[l] = std::sqrt(std::max(s2 / static_cast<double>(count) - mean * mean, 0.0) /
                          static_cast<double>(count));
  }
  double ey = 0.0;
  double yy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ey += e[i] * y[i];
    yy += y[i] * y[i];
  }
  const double corr = ey / std::sqrt(lag[0] * static_cast<double>(n) * yy);
  const double corr_bound = 5.0 / std::sqrt(static_cast<double>(n));

  Rng w_rng = derive_stream(o.seed, 1, kDitherLane);
  double w_sum = 0.0;
  double w_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = draw_dither(q, w_rng);
    w_sum += w;
    w_sq += w * w;
  }
  const double w_mean = w_sum / static_cast<double>(n);
  const double w_var = w_sq / static_cast<double>(n) - w_mean * w_mean;
  const double target_w = q.delta() * q.delta() / 6.0;

  const double r0_err = std::abs(lag[0] - target0) / target0;
  double worst_lag = 0.0;
  for (std::size_t l = 1; l < kErrorLags; ++l) {
    worst_lag = std::max(worst_lag, std::abs(lag[l]) / lag_se[l]);
  }
  const double w_err = std::abs(w_var - target_w) / target_w;

  Table t;
  t.header = {"quantity", "measured", "target", "bound", "passed"};
  auto add = [&](std::string name, double measured, double target, double bound, bool ok) {
    t.rows.push_back({std::move(name), measured, target, bound, static_cast<long long>(ok ? 1 : 0)});
  };
  const bool r0_ok = r0_err < 0.02;
  add("R_e[0]", lag[0], target0, 0.02, r0_ok);
  bool lags_ok = true;
  for (std::size_t l = 1; l < kErrorLags; ++l) {
    const bool ok = std::abs(lag[l]) < 5.0 * lag_se[l];
    lags_ok = lags_ok && ok;
    add("R_e[" + std::to_string(l) + "]", lag[l], 0.0, 5.0 * lag_se[l], ok);
  }
  const bool corr_ok = std::abs(corr) < corr_bound;
  add("corr(e,y)", corr, 0.0, corr_bound, corr_ok);
  const bool w_ok = w_err < 0.01;
  add("var(dither)", w_var, target_w, 0.01, w_ok);
  add("overloads", static_cast<double>(z.overload_count), 0.0, 0.0, true);
  tables["validation_quantizer"] = std::move(t);

  const bool passed = r0_ok && lags_ok && corr_ok && w_ok;
  return finish(r, r0_err, 0.02, passed,
                fmt("R_e[0] rel err %.3g, worst lag %.3g se", r0_err, worst_lag) +
                    fmt(", |corr| %.3g, dither var rel err %.3g", std::abs(corr), w_err));
}

CriterionResult check_structure(const ValidationOptions& o, std::map<std::string, Table>& tables) {
  CriterionResult r = start(9, "single-alias structure and optimality under perturbation");
  r.budget = 10.0;
  std::vector<NamedPsd> psds = study_psds();
  psds.push_back({"bimodal", make_bimodal_psd(1.0)});

  Table t;
  t.header = {"psd",           "f_s",       "b",           "structure_violations",
              "constraint_residual", "consistency_rel_err", "worst_perturbation_gain", "passed"};
  bool passed = true;
  double worst_gain = -std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  std::size_t spot_failures = 0;
  for (std::size_t pi = 0; pi < psds.size(); ++pi) {
    const auto& [name, psd] = psds[pi];
    for (double ratio : {0.5, 0.75, 1.0, 2.0}) {
      const FoldedSpectrum folded = fold(psd, ratio, o.grid_size);
      for (double b : {1.0, 3.0, 6.0}) {
        const AdcConfig adc = scheduled_adc(ratio, b);
        const double zeta = solve_zeta(folded, adc) * o.zeta_scale;
        const FilterDesign design = prefilter_at_level(folded, psd, adc, zeta);

        std::size_t bad = 0;
        for (std::size_t i = 0; i < folded.size(); ++i) {
          int carriers = 0;
          int carrier = 0;
          for (int k = design.h2.span().first; k <= design.h2.span().last; ++k) {
            if (design.h2.at(i, k) > 0.0) {
              ++carriers;
              carrier = k;
            }
          }
          if (carriers > 1 ||
              (carriers == 1 && carrier != brute_force_dominant(psd, folded.frequency(i), ratio))) {
            ++bad;
          }
        }
        violations += bad;

        // Optimality spot check: the level meets the constraint, the generic
        // TMSE agrees with the closed expression, and no perturbation wins.
        const double optimal = tmse_optimal(folded, psd, adc).ntmse;
        const double residual = std::abs(water_filling_constraint(folded, adc, zeta) - 1.0);
        const double consistency =
            rel_err(tmse_for_prefilter(design.h2, psd, adc).ntmse, optimal);
        double gain = -std::numeric_limits<double>::infinity();
        Rng rng = derive_stream(o.seed, pi * 1000 + static_cast<std::uint64_t>(ratio * 100) + b,
                                2);
        std::uniform_real_distribution<double> u(-0.2, 0.2);
        for (int trial = 0; trial < 100; ++trial) {
          AliasedResponse h2 = design.h2;
          for (double& v : h2.raw()) v = std::max(0.0, v * (1.0 + u(rng)));
          const double perturbed = tmse_for_prefilter(h2, psd, adc).ntmse;
          gain = std::max(gain, optimal - perturbed);
        }
        worst_gain = std::max(worst_gain, gain);
        const bool ok = bad == 0 && residual <= kLevelTol && consistency <= kRelTol && gain <= 1e-9;
        if (!ok) ++spot_failures;
        passed = passed && ok;
        t.rows.push_back({name, ratio, b, static_cast<long long>(bad), residual, consistency, gain,
                          static_cast<long long>(ok ? 1 : 0)});
      }
    }
  }
  tables["validation_structure"] = std::move(t);
  return finish(r, worst_gain, 1e-9, passed,
                std::to_string(violations) + " structure violations, " +
                    std::to_string(spot_failures) + " failing designs of " +
                    std::to_string(psds.size() * 12));
}

bool ValidationReport::all_passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
}

Table ValidationReport::summary() const {
  Table t;
  t.header = {"id", "name", "passed", "measured", "threshold", "detail"};
  for (const auto& c : criteria) {
    t.rows.push_back({static_cast<long long>(c.id), c.name, static_cast<long long>(c.passed ? 1 : 0),
                      c.measured, c.threshold, c.detail});
  }
  return t;
}

std::map<std::string, std::string> ValidationReport::csv_files() const {
  std::map<std::string, std::string> out;
  out["validation.csv"] = to_csv(summary());
  for (const auto& [stem, table] : tables) out[stem + ".csv"] = to_csv(table);
  return out;
}

void ValidationReport::write(const std::filesystem::path& dir) const {
  for (const auto& [file, text] : csv_files()) write_text(dir / file, text);
}

namespace {

using Check = CriterionResult (*)(const ValidationOptions&, std::map<std::string, Table>&);
constexpr Check kChecks[] = {check_closed_form,    check_eq_consistency, check_water_level,
                             check_monte_carlo,    check_non_dithered,   check_pcm_comparison,
                             check_rate_search,    check_quantizer_stats, check_structure};

ValidationReport run_checks(const ValidationOptions& o, bool timed) {
  ValidationReport report;
  for (int id = 1; id <= 9; ++id) {
    if (o.only && *o.only != id && *o.only != 10) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult c = kChecks[id - 1](o, report.tables);
    if (timed) {
      c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    report.criteria.push_back(std::move(c));
  }
  return report;
}

}  // namespace

ValidationReport run_validation(const ValidationOptions& options) {
  if (options.only && (*options.only < 1 || *options.only > kCriteriaCount)) {
    throw std::invalid_argument("criterion id must be in 1.." + std::to_string(kCriteriaCount));
  }
  ValidationReport report = run_checks(options, true);
  if (options.only && *options.only != 10) return report;

  // Determinism: a second pass with the same options must emit identical bytes.
  const auto begin = std::chrono::steady_clock::now();
  const ValidationReport again = run_checks(options, false);
  const auto first = report.csv_files();
  const auto second = again.csv_files();
  std::size_t differing = 0;
  for (const auto& [file, text] : first) {
    auto it = second.find(file);
    if (it == second.end() || it->second != text) ++differing;
  }
  differing += second.size() > first.size() ? second.size() - first.size() : 0;
  CriterionResult c = start(10, "repeated run emits byte-identical CSV");
  c.passed = differing == 0;
  c.measured = static_cast<double>(differing);
  c.threshold = 0.0;
  c.detail = std::to_string(first.size()) + " files compared, " + std::to_string(differing) +
             " differ";
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  if (options.only) {
    report.criteria.clear();
  }
  report.criteria.push_back(std::move(c));
  return report;
}

}  // namespace uadc
