#include "uadc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uadc {

namespace {

QuantizerSpec size_quantizer(const SimConfig& sim) {
  const double power = sim.quantizer_power > 0.0 ? sim.quantizer_power : sim.design.signal_power;
  return dynamic_range(sim.adc(), power, sim.dithered);
}

}  // namespace

int default_oversample(double f_s, double f_nyq) {
  const int needed = static_cast<int>(std::ceil(4.0 * f_nyq / f_s - 1e-12));
  return std::max(4, needed);
}

int SimConfig::dense_factor() const {
  return oversample > 0 ? oversample : default_oversample(adc().f_s, psd.f_nyq());
}

void validate(const SimConfig& sim) {
  validate(sim.adc());
  if (!sim.adc().integer_bits()) throw InvalidConfigError("simulation needs an integer bit depth");
  if (sim.dense_factor() < 4) throw InvalidConfigError("oversampling factor must be at least 4");
  if (sim.dense_rate() < 2.0 * sim.psd.f_nyq()) {
    throw InvalidConfigError("dense grid rate must be at least 2 f_nyq");
  }
  if (sim.block_samples < 2 || sim.block_samples % 2 != 0) {
    throw InvalidConfigError("block length must be even and at least 2");
  }
  if (sim.trials < 1) throw InvalidConfigError("need at least one trial");
  if (!sim.design.g) throw InvalidConfigError("design has no recovery filter");
}

std::vector<double> synthesize_process(const PsdModel& psd, double f_d, std::size_t length,
                                       Rng& rng) {
  if (length < 2 || length % 2 != 0) throw std::invalid_argument("synthesis length must be even");
  if (f_d < psd.f_nyq()) throw std::invalid_argument("PSD band exceeds the synthesis grid");
  const double df = f_d / static_cast<double>(length);
  const std::size_t bins = length / 2 + 1;
  std::vector<std::complex<double>> spectrum(bins);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < bins; ++k) {
    const double var = psd(static_cast<double>(k) * df) * df;
    const bool real_bin = k == 0 || k == bins - 1;
    if (real_bin) {
      const double a = normal(rng);
      spectrum[k] = {std::sqrt(var) * a, 0.0};
    } else {
      const double a = normal(rng);
      const double b = normal(rng);
      const double s = std::sqrt(0.5 * var);
      spectrum[k] = {s * a, s * b};
    }
  }
  RealFft fft(length);
  std::vector<double> x(length);
  fft.inverse(spectrum, x);
  return x;
}

AcquisitionChain::AcquisitionChain(const SimConfig& sim)
    : sim_((validate(sim), sim)),
      quantizer_(size_quantizer(sim)),
      dense_fft_(sim.dense_length()),
      block_fft_(sim.block_samples) {
  const double df = sim_.dense_rate() / static_cast<double>(sim_.dense_length());
  const std::size_t bins = dense_fft_.bins();
  h_dense_.resize(bins);
  g_dense_.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * df;
    h_dense_[k] = std::sqrt(sim_.design.prefilter(f));
    g_dense_[k] = (*sim_.design.g)(f).real();
  }
}

std::vector<double> AcquisitionChain::synthesize(Rng& rng) const {
  return synthesize_process(sim_.psd, sim_.dense_rate(), sim_.dense_length(), rng);
}

Acquisition AcquisitionChain::acquire(std::span<const double> x_dense, Rng& rng) {
  const std::size_t n = sim_.dense_length();
  if (x_dense.size() != n) throw std::invalid_argument("dense block has the wrong length");
  const auto factor = static_cast<std::size_t>(sim_.dense_factor());

  std::vector<std::complex<double>> spectrum(dense_fft_.bins());
  dense_fft_.forward(x_dense, spectrum);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] *= h_dense_[k] * scale;
  std::vector<double> y_dense(n);
  dense_fft_.inverse(spectrum, y_dense);

  Acquisition out;
  out.y.resize(sim_.block_samples);
  for (std::size_t m = 0; m < out.y.size(); ++m) out.y[m] = y_dense[m * factor];
  QuantizedBlock q = quantize_stream(quantizer_, out.y, rng);
  out.z = std::move(q.samples);
  out.overload_count = q.overload_count;
  return out;
}

std::vector<double> AcquisitionChain::reconstruct(std::span<const double> z) {
  const std::size_t m = sim_.block_samples;
  if (z.size() != m) throw std::invalid_argument("sample block has the wrong length");
  std::vector<std::complex<double>> block(block_fft_.bins());
  block_fft_.forward(z, block);

  // x^[m] = sum_n g(m T_d - n T_s) z[n] on the periodized block; per dense bin
  // this is G(f_k) Z(k mod M) f_s / M.
  const double scale = sim_.adc().f_s / static_cast<double>(m);
  std::vector<std::complex<double>> dense(dense_fft_.bins());
  for (std::size_t k = 0; k < dense.size(); ++k) {
    if (g_dense_[k] == 0.0) continue;
    const std::size_t r = k % m;
    const std::complex<double> zr = r <= m / 2 ? block[r] : std::conj(block[m - r]);
    dense[k] = g_dense_[k] * scale * zr;
  }
  dense.front().imag(0.0);
  dense.back().imag(0.0);
  std::vector<double> x_hat(sim_.dense_length());
  dense_fft_.inverse(dense, x_hat);
  return x_hat;
}

TrialResult AcquisitionChain::run_trial(std::size_t trial_index) {
  Rng process_rng = derive_stream(sim_.seed, trial_index, kProcessLane);
  Rng dither_rng = derive_stream(sim_.seed, trial_index, kDitherLane);
  const std::vector<double> x = synthesize(process_rng);
  const Acquisition acq = acquire(x, dither_rng);
  const std::vector<double> x_hat = reconstruct(acq.z);

  TrialResult r;
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x_hat[i] - x[i];
    sq += d * d;
  }
  r.empirical_tmse = sq / static_cast<double>(x.size());

  const std::size_t m = acq.z.size();
  r.overload_fraction = static_cast<double>(acq.overload_count) / static_cast<double>(m);
  std::vector<double> e(m);
  for (std::size_t n = 0; n < m; ++n) e[n] = acq.z[n] - acq.y[n];
  for (std::size_t lag = 0; lag < kErrorLags; ++lag) {
    double acc = 0.0;
    for (std::size_t n = 0; n < m; ++n) acc += e[n] * e[(n + lag) % m];
    r.error_autocorr[lag] = acc / static_cast<double>(m);
  }
  double ey = 0.0;
  double yy = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    ey += e[n] * acq.y[n];
    yy += acq.y[n] * acq.y[n];
  }
  const double ee = r.error_autocorr[0] * static_cast<double>(m);
  r.input_error_corr = (ee > 0.0 && yy > 0.0) ? ey / std::sqrt(ee * yy) : 0.0;
  r.sample_signal_power = yy / static_cast<double>(m);
  return r;
}

Acquisition acquire(std::span<const double> x_dense, const SimConfig& sim, Rng& rng) {
  AcquisitionChain chain(sim);
  return chain.acquire(x_dense, rng);
}

std::vector<double> reconstruct(std::span<const double> z, const SimConfig& sim) {
  AcquisitionChain chain(sim);
  return chain.reconstruct(z);
}

SimSummary run_trials(const SimConfig& sim) {
  AcquisitionChain chain(sim);
  SimSummary s;
  s.trials = sim.trials;
  s.delta = chain.quantizer().delta();
  s.per_trial.reserve(sim.trials);
  for (std::size_t t = 0; t < sim.trials; ++t) s.per_trial.push_back(chain.run_trial(t));

  const double count = static_cast<double>(sim.trials);
  const double sigma2 = sim.psd.power();
  double sum = 0.0;
  for (const auto& r : s.per_trial) sum += r.empirical_tmse;
  s.mean_tmse = sum / count;
  s.ntmse = s.mean_tmse / sigma2;
  double var = 0.0;
  for (const auto& r : s.per_trial) {
    const double d = r.empirical_tmse / sigma2 - s.ntmse;
    var += d * d;
  }
  var = sim.trials > 1 ? var / (count - 1.0) : 0.0;
  s.stderr_ntmse = std::sqrt(var / count);
  s.ci_low = s.ntmse - 1.96 * s.stderr_ntmse;
  s.ci_high = s.ntmse + 1.96 * s.stderr_ntmse;
  for (const auto& r : s.per_trial) {
    s.overload_fraction += r.overload_fraction;
    s.input_error_corr += r.input_error_corr;
    for (std::size_t l = 0; l < kErrorLags; ++l) s.error_autocorr[l] += r.error_autocorr[l];
  }
  s.overload_fraction /= count;
  s.input_error_corr /= count;
  for (auto& v : s.error_autocorr) v /= count;
  return s;
}

}  // namespace uadc
