#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uadc/design.hpp"
#include "uadc/fft.hpp"
#include "uadc/quantizer.hpp"
#include "uadc/random.hpp"
#include "uadc/spectra.hpp"

namespace uadc {

inline constexpr std::size_t kDefaultBlockSamples = 4096;
inline constexpr std::size_t kDefaultTrials = 100;
inline constexpr std::size_t kErrorLags = 11;

// Monte Carlo setup. The continuous-time chain is realized on a dense grid of
// rate oversample * f_s over a block of block_samples ADC periods; everything
// is circular on the block.
struct SimConfig {
  PsdModel psd;
  FilterDesign design;  // recovery filter must be populated
  int oversample = 0;   // 0 selects default_oversample
  std::size_t block_samples = kDefaultBlockSamples;
  std::size_t trials = kDefaultTrials;
  std::uint64_t seed = 1;
  bool dithered = true;
  // Power used to size the quantizer; 0 takes the design's analytic E{y^2}.
  double quantizer_power = 0.0;

  const AdcConfig& adc() const { return design.adc; }
  int dense_factor() const;
  double dense_rate() const { return dense_factor() * adc().f_s; }
  std::size_t dense_length() const {
    return block_samples * static_cast<std::size_t>(dense_factor());
  }
};

// Smallest L >= 4 with L f_s >= 4 f_nyq.
int default_oversample(double f_s, double f_nyq);

// Checks the SimConfig invariants; throws InvalidConfigError.
void validate(const SimConfig& sim);

struct TrialResult {
  double empirical_tmse = 0.0;
  double overload_fraction = 0.0;
  std::array<double, kErrorLags> error_autocorr{};
  double input_error_corr = 0.0;
  double sample_signal_power = 0.0;  // empirical E{y^2}
};

struct Acquisition {
  std::vector<double> y;  // filtered samples before quantization
  std::vector<double> z;  // quantizer output
  std::size_t overload_count = 0;
};

// Periodic Gaussian process with the given PSD on a grid of rate f_d:
// independent circular Gaussian bins of variance S(f_k) * f_d / length.
std::vector<double> synthesize_process(const PsdModel& psd, double f_d, std::size_t length,
                                       Rng& rng);

// Filter, sample and quantize one block. Holds FFT plans and the sampled
// filter responses so repeated trials reuse them.
class AcquisitionChain {
 public:
  explicit AcquisitionChain(const SimConfig& sim);

  const SimConfig& config() const { return sim_; }
  const QuantizerSpec& quantizer() const { return quantizer_; }

  std::vector<double> synthesize(Rng& rng) const;
  Acquisition acquire(std::span<const double> x_dense, Rng& rng);
  std::vector<double> reconstruct(std::span<const double> z);
  TrialResult run_trial(std::size_t trial_index);

 private:
  SimConfig sim_;
  QuantizerSpec quantizer_;
  std::vector<double> h_dense_;  // |H| at dense bins 0..n/2
  std::vector<double> g_dense_;  // G at dense bins 0..n/2
  RealFft dense_fft_;
  RealFft block_fft_;
};

Acquisition acquire(std::span<const double> x_dense, const SimConfig& sim, Rng& rng);
std::vector<double> reconstruct(std::span<const double> z, const SimConfig& sim);

struct SimSummary {
  std::size_t trials = 0;
  double mean_tmse = 0.0;
  double ntmse = 0.0;   // mean_tmse / sigma^2 with the analytic sigma^2
  double stderr_ntmse = 0.0;
  double ci_low = 0.0;  // 95% normal interval on ntmse
  double ci_high = 0.0;
  double overload_fraction = 0.0;
  std::array<double, kErrorLags> error_autocorr{};
  double input_error_corr = 0.0;
  double delta = 0.0;
  std::vector<TrialResult> per_trial;
};

// Independent trials with streams derived from (seed, trial); reduction in
// trial order.
SimSummary run_trials(const SimConfig& sim);

}  // namespace uadc
