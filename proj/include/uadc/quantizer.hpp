#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uadc/random.hpp"

namespace uadc {

// Raised when an ADC configuration cannot be used, most often because the
// overload factor is too large for the bit depth (kappa_bar diverges).
class InvalidConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AdcConfig {
  double f_s = 1.0;   // sampling rate
  double bits = 3.0;  // may be fractional in theory mode
  double eta = 2.5;   // overload factor

  double sampling_period() const { return 1.0 / f_s; }
  double bit_rate() const { return f_s * bits; }
  bool integer_bits() const;
};

// Throws InvalidConfigError unless f_s, bits and eta are positive and finite.
void validate(const AdcConfig& config);

// Overload factor growing with resolution: 0.25 b + 1.75.
double eta_schedule(double bits);

// AdcConfig with eta taken from eta_schedule.
AdcConfig scheduled_adc(double f_s, double bits);

struct DistortionConstants {
  double kappa = 0.0;
  double kappa_bar = 0.0;
};

// kappa_bar = eta^2 / (1 - 2 eta^2 / (3 * 2^{2b})), kappa = kappa_bar / 2^{2b}.
DistortionConstants distortion_constants(const AdcConfig& config);

// Quantization error power kappa * E{y^2}, i.e. Delta^2 / 4.
double effective_noise_power(const AdcConfig& config, double signal_power);

class QuantizerSpec {
 public:
  QuantizerSpec(double gamma, int bits, bool dithered);

  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  int bits() const { return bits_; }
  bool dithered() const { return dithered_; }
  QuantizerSpec with_dither(bool dithered) const;

  // Largest output magnitude, gamma - delta/2.
  double max_level() const { return gamma_ - 0.5 * delta_; }
  // The 2^b output levels in increasing order.
  std::vector<double> levels() const;

 private:
  double gamma_;
  double delta_;
  int bits_;
  bool dithered_;
};

// Sizes the quantizer from the analytic filtered-signal power:
// gamma = sqrt(kappa_bar * E{y^2}), delta = 2 gamma / 2^b. Bits must be integral.
QuantizerSpec dynamic_range(const AdcConfig& config, double signal_power, bool dithered = true);

// Mid-rise quantizer with saturation at +-(gamma - delta/2).
double midrise(const QuantizerSpec& spec, double x);

// Triangular dither on [-delta, delta], variance delta^2/6.
double draw_dither(const QuantizerSpec& spec, Rng& rng);

struct QuantizedBlock {
  std::vector<double> samples;
  std::size_t overload_count = 0;
};

// z[n] = q(y[n] + w[n]); w is zero for a non-dithered spec. Overloads are
// counted when |y[n] + w[n]| >= gamma.
QuantizedBlock quantize_stream(const QuantizerSpec& spec, std::span<const double> y, Rng& rng);

}  // namespace uadc
