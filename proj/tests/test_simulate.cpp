#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "uadc/harness.hpp"
#include "uadc/simulate.hpp"

using namespace uadc;

namespace {

SimConfig make_sim(const PsdModel& psd, const AdcConfig& adc, std::size_t trials,
                   std::size_t block = kDefaultBlockSamples, bool dithered = true) {
  const FoldedSpectrum folded = fold(psd, adc.f_s);
  SimConfig sim{psd, recovery_filter(optimal_prefilter(folded, psd, adc), psd)};
  sim.trials = trials;
  sim.block_samples = block;
  sim.dithered = dithered;
  return sim;
}

}  // namespace

TEST_CASE("default oversampling covers four Nyquist bands") {
  CHECK(default_oversample(1.0, 1.0) == 4);
  CHECK(default_oversample(2.0, 1.0) == 4);
  CHECK(default_oversample(0.5, 1.0) == 8);
  CHECK(default_oversample(0.3, 1.0) == 14);
}

TEST_CASE("synthesized process has the prescribed power") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t block = 0; block < 64; ++block) {
    Rng rng = derive_stream(17, block, kProcessLane);
    const std::vector<double> x = synthesize_process(rect, 4.0, 16384, rng);
    for (double v : x) sum += v * v;
    count += x.size();
  }
  CHECK(sum / static_cast<double>(count) == doctest::Approx(1.0).scale(0.0).epsilon(0.005));

  const PsdModel zero = PsdModel::tabulated(1.0, {{0.0, 0.0}, {0.5, 0.0}});
  Rng rng = derive_stream(1, 0, kProcessLane);
  for (double v : synthesize_process(zero, 4.0, 64, rng)) CHECK(v == 0.0);
  CHECK_THROWS(synthesize_process(rect, 4.0, 63, rng));
  CHECK_THROWS(synthesize_process(rect, 0.5, 64, rng));
}

TEST_CASE("averaged periodogram matches the PSD") {
  // 200 blocks; bins pooled into bands of 32 so each band averages 6400
  // periodogram ordinates.
  const PsdModel tri = make_unit_psd(PsdKind::triangular, 1.0);
  constexpr std::size_t n = 1024;
  constexpr std::size_t band = 32;
  const double f_d = 2.0;
  std::vector<double> avg(n / 2 + 1, 0.0);
  for (std::uint64_t block = 0; block < 200; ++block) {
    Rng rng = derive_stream(23, block, kProcessLane);
    const auto p = oracle::periodogram(synthesize_process(tri, f_d, n, rng), f_d);
    for (std::size_t k = 0; k < p.size(); ++k) avg[k] += p[k] / 200.0;
  }
  double worst = 0.0;
  for (std::size_t start = 1; start + band <= n / 2; start += band) {
    double measured = 0.0;
    double expected = 0.0;
    for (std::size_t k = start; k < start + band; ++k) {
      measured += avg[k] / band;
      expected += tri(static_cast<double>(k) * f_d / n) / band;
    }
    worst = std::max(worst, std::abs(measured - expected));
  }
  CHECK(worst < 0.05 * tri(0.0));
}

TEST_CASE("all-pass fine quantizer: error has the dithered variance") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  const AdcConfig adc{1.0, 12.0, 8.0};
  const FoldedSpectrum folded = fold(rect, 1.0, 1024);
  SimConfig sim{rect, recovery_filter(make_design(brickwall(0.5), folded, rect, adc), rect)};
  sim.block_samples = 16384;
  AcquisitionChain chain(sim);
  double sq = 0.0;
  std::size_t count = 0;
  for (std::uint64_t t = 0; t < 62; ++t) {
    Rng p = derive_stream(3, t, kProcessLane);
    Rng d = derive_stream(3, t, kDitherLane);
    const Acquisition a = chain.acquire(chain.synthesize(p), d);
    for (std::size_t i = 0; i < a.y.size(); ++i) sq += (a.z[i] - a.y[i]) * (a.z[i] - a.y[i]);
    count += a.y.size();
  }
  const double delta = chain.quantizer().delta();
  CHECK(sq / static_cast<double>(count) == doctest::Approx(delta * delta / 4.0).scale(0.0).epsilon(0.02));
}

TEST_CASE("zero prefilter: silent input and dither-driven half-step output") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  const AdcConfig adc{1.0, 3.0, 2.5};
  const FoldedSpectrum folded = fold(rect, 1.0, 256);
  SimConfig sim{rect, recovery_filter(make_design(brickwall(0.0), folded, rect, adc), rect)};
  sim.block_samples = 256;
  sim.quantizer_power = 1.0;
  AcquisitionChain chain(sim);
  Rng p = derive_stream(1, 0, kProcessLane);
  Rng d = derive_stream(1, 0, kDitherLane);
  const Acquisition a = chain.acquire(chain.synthesize(p), d);
  const double half = 0.5 * chain.quantizer().delta();
  bool saw_pos = false;
  bool saw_neg = false;
  for (std::size_t i = 0; i < a.y.size(); ++i) {
    CHECK(std::abs(a.y[i]) < 1e-12);
    CHECK(std::abs(a.z[i]) == doctest::Approx(half));
    saw_pos = saw_pos || a.z[i] > 0.0;
    saw_neg = saw_neg || a.z[i] < 0.0;
  }
  CHECK(saw_pos);
  CHECK(saw_neg);
}

TEST_CASE("analytic filtered power matches the sample variance") {
  const PsdModel tri = make_unit_psd(PsdKind::triangular, 1.0);
  const SimConfig sim = make_sim(tri, scheduled_adc(0.8, 3.0), 200, 1024);
  AcquisitionChain chain(sim);
  double sq = 0.0;
  std::size_t count = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    Rng p = derive_stream(8, t, kProcessLane);
    Rng d = derive_stream(8, t, kDitherLane);
    const Acquisition a = chain.acquire(chain.synthesize(p), d);
    for (double v : a.y) sq += v * v;
    count += a.y.size();
  }
  CHECK(sq / static_cast<double>(count) == doctest::Approx(sim.design.signal_power).scale(0.0).epsilon(0.01));
}

TEST_CASE("reconstruction is linear and reproduces the recovery impulse response") {
  const PsdModel tri = make_unit_psd(PsdKind::triangular, 1.0);
  const SimConfig sim = make_sim(tri, scheduled_adc(0.75, 3.0), 1, 32);
  AcquisitionChain chain(sim);
  const std::vector<double> zero(32, 0.0);
  for (double v : chain.reconstruct(zero)) CHECK(v == 0.0);

  std::vector<double> impulse(32, 0.0);
  const long n0 = 5;
  impulse[n0] = 1.0;
  const std::vector<double> x_hat = chain.reconstruct(impulse);
  const auto L = static_cast<long>(sim.dense_factor());
  const std::size_t n = sim.dense_length();
  auto g = [&](double f) { return (*sim.design.g)(f).real(); };
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double ref = oracle::impulse_response(g, sim.dense_rate(), n, 0.75, 32,
                                                static_cast<long>(m), n0 * L);
    worst = std::max(worst, std::abs(x_hat[m] - ref));
    scale = std::max(scale, std::abs(ref));
  }
  CHECK(worst < 1e-12 * std::max(scale, 1.0));
  CHECK(scale > 0.0);
}

TEST_CASE("noiseless chain reconstructs a Nyquist-sampled process") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  for (double f_s : {1.0, 2.0}) {
    const FoldedSpectrum folded = fold(rect, f_s, 1024);
    const AdcConfig adc{f_s, 30.0, 2.5};
    SimConfig sim{rect, recovery_filter(make_design(brickwall(0.5), folded, rect, adc), rect)};
    sim.block_samples = 1024;
    AcquisitionChain chain(sim);
    Rng p = derive_stream(4, 0, kProcessLane);
    Rng d = derive_stream(4, 0, kDitherLane);
    const std::vector<double> x = chain.synthesize(p);
    const Acquisition a = chain.acquire(x, d);
    const std::vector<double> x_hat = chain.reconstruct(a.y);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err += (x_hat[i] - x[i]) * (x_hat[i] - x[i]);
    CHECK(err / static_cast<double>(x.size()) < 1e-6);
  }
}

TEST_CASE("overload-free Monte Carlo agrees with theory") {
  // A wide overload factor keeps the chain inside the additive-noise model.
  for (double f_s : {0.5, 1.0, 2.0}) {
    const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
    const AdcConfig adc{f_s, 3.0, 6.0};
    const SimConfig sim = make_sim(rect, adc, 50);
    const SimSummary s = run_trials(sim);
    const double theory = tmse_optimal(fold(rect, f_s), rect, adc).ntmse;
    CHECK(std::abs(s.ntmse - theory) <= std::max(0.03 * theory, 3.0 * s.stderr_ntmse));
    CHECK(s.overload_fraction == 0.0);
  }
}

TEST_CASE("reference Monte Carlo point under the overload schedule") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  const SimSummary s = run_trials(make_sim(rect, {1.0, 3.0, 2.5}, 100));
  INFO("simulated ntmse " << s.ntmse << " +- " << s.stderr_ntmse << ", overload "
                          << s.overload_fraction);
  CHECK(s.ntmse == doctest::Approx(0.094577).scale(0.0).epsilon(0.03));
}

TEST_CASE("non-dithered quantization is no worse, and results are deterministic") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  const SimSummary d = run_trials(make_sim(rect, {1.0, 3.0, 2.5}, 40, 2048, true));
  const SimSummary n = run_trials(make_sim(rect, {1.0, 3.0, 2.5}, 40, 2048, false));
  CHECK(n.ntmse <= d.ntmse + 2.0 * d.stderr_ntmse);
  const SimSummary again = run_trials(make_sim(rect, {1.0, 3.0, 2.5}, 40, 2048, true));
  CHECK(again.ntmse == d.ntmse);
  CHECK(again.stderr_ntmse == d.stderr_ntmse);
  CHECK(again.error_autocorr == d.error_autocorr);
  for (const auto& t : d.per_trial) {
    CHECK(t.empirical_tmse >= 0.0);
    CHECK(t.overload_fraction >= 0.0);
    CHECK(t.overload_fraction <= 1.0);
  }
  CHECK(d.ci_low < d.ntmse);
  CHECK(d.ci_high > d.ntmse);
}

TEST_CASE("four times the trials roughly halves the standard error") {
  const PsdModel tri = make_unit_psd(PsdKind::triangular, 1.0);
  const SimSummary few = run_trials(make_sim(tri, scheduled_adc(1.0, 3.0), 25, 1024));
  const SimSummary many = run_trials(make_sim(tri, scheduled_adc(1.0, 3.0), 100, 1024));
  const double ratio = few.stderr_ntmse / many.stderr_ntmse;
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.8);
}

TEST_CASE("dithered error moments inside the chain") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  const SimSummary s = run_trials(make_sim(rect, {1.0, 4.0, 6.0}, 50, 4096));
  const double target = s.delta * s.delta / 4.0;
  CHECK(s.error_autocorr[0] == doctest::Approx(target).scale(0.0).epsilon(0.02));
  const double n = 50.0 * 4096.0;
  for (std::size_t l = 1; l < kErrorLags; ++l) {
    CHECK(std::abs(s.error_autocorr[l]) < 5.0 * target / std::sqrt(n));
  }
  CHECK(std::abs(s.input_error_corr) < 5.0 / std::sqrt(n));
}

TEST_CASE("optimal design beats the brickwall baseline empirically at R = 3.75") {
  for (PsdKind kind : {PsdKind::triangular, PsdKind::gaussian3db}) {
    const PsdModel psd = make_unit_psd(kind, 1.0);
    const double f_s = 0.9375;  // b = 4
    const AdcConfig adc = scheduled_adc(f_s, 4.0);
    const FoldedSpectrum folded = fold(psd, f_s);
    SimulationSettings settings;
    settings.trials = 60;
    const FilterDesign opt = recovery_filter(optimal_prefilter(folded, psd, adc), psd);
    const FilterDesign pcm =
        recovery_filter(make_design(pcm_baseline_prefilter(psd, f_s), folded, psd, adc), psd);
    const SimSummary a = run_trials(make_sim_config(psd, opt, settings, 1, true));
    const SimSummary b = run_trials(make_sim_config(psd, pcm, settings, 1, true));
    CHECK(a.ntmse <= b.ntmse + 2.0 * b.stderr_ntmse);
  }
}

TEST_CASE("simulation configuration errors") {
  const PsdModel rect = make_unit_psd(PsdKind::rectangular, 1.0);
  SimConfig sim = make_sim(rect, {1.0, 3.0, 2.5}, 1, 64);
  sim.block_samples = 63;
  CHECK_THROWS_AS(AcquisitionChain{sim}, InvalidConfigError);
  sim.block_samples = 64;
  sim.oversample = 2;
  CHECK_THROWS_AS(AcquisitionChain{sim}, InvalidConfigError);
  sim.oversample = 0;
  sim.trials = 0;
  CHECK_THROWS_AS(run_trials(sim), InvalidConfigError);
  SimConfig fractional = make_sim(rect, {1.0, 3.5, 2.5}, 1, 64);
  CHECK_THROWS_AS(AcquisitionChain{fractional}, InvalidConfigError);
  SimConfig no_g = make_sim(rect, {1.0, 3.0, 2.5}, 1, 64);
  no_g.design.g.reset();
  CHECK_THROWS_AS(AcquisitionChain{no_g}, InvalidConfigError);
  AcquisitionChain chain(make_sim(rect, {1.0, 3.0, 2.5}, 1, 64));
  Rng rng = derive_stream(1, 0, kDitherLane);
  CHECK_THROWS(chain.acquire(std::vector<double>(10), rng));
  CHECK_THROWS(chain.reconstruct(std::vector<double>(10)));
}
