#include "uadc/quantizer.hpp"

#include <algorithm>
#include <cmath>

namespace uadc {

bool AdcConfig::integer_bits() const {
  return bits >= 1.0 && std::floor(bits) == bits && bits <= 30.0;
}

void validate(const AdcConfig& config) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(config.f_s)) throw InvalidConfigError("sampling rate must be positive");
  if (!positive(config.bits)) throw InvalidConfigError("bit depth must be positive");
  if (!positive(config.eta)) throw InvalidConfigError("overload factor eta must be positive");
}

double eta_schedule(double bits) { return 0.25 * bits + 1.75; }

AdcConfig scheduled_adc(double f_s, double bits) { return {f_s, bits, eta_schedule(bits)}; }

DistortionConstants distortion_constants(const AdcConfig& config) {
  validate(config);
  const double eta2 = config.eta * config.eta;
  // 2^{-2b} underflows to zero for very fine quantizers, which is the
  // no-quantization limit kappa = 0.
  const double inv_levels2 = std::exp2(-2.0 * config.bits);
  const double denom = 1.0 - 2.0 * eta2 * inv_levels2 / 3.0;
  if (!(denom > 0.0)) {
    throw InvalidConfigError("quantizer too coarse for eta=" + std::to_string(config.eta) +
                             " at b=" + std::to_string(config.bits) +
                             " (1 - 2 eta^2 / (3 2^{2b}) <= 0)");
  }
  DistortionConstants c;
  c.kappa_bar = eta2 / denom;
  c.kappa = c.kappa_bar * inv_levels2;
  return c;
}

double effective_noise_power(const AdcConfig& config, double signal_power) {
  return distortion_constants(config).kappa * signal_power;
}

QuantizerSpec::QuantizerSpec(double gamma, int bits, bool dithered)
    : gamma_(gamma), delta_(0.0), bits_(bits), dithered_(dithered) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidConfigError("dynamic range gamma must be positive");
  }
  if (bits < 1 || bits > 30) throw InvalidConfigError("quantizer bit depth must be in [1, 30]");
  delta_ = std::ldexp(2.0 * gamma, -bits);
}

QuantizerSpec QuantizerSpec::with_dither(bool dithered) const {
  QuantizerSpec out = *this;
  out.dithered_ = dithered;
  return out;
}

std::vector<double> QuantizerSpec::levels() const {
  const long half = 1L << (bits_ - 1);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * half));
  for (long m = -half; m < half; ++m) out.push_back(delta_ * (static_cast<double>(m) + 0.5));
  return out;
}

QuantizerSpec dynamic_range(const AdcConfig& config, double signal_power, bool dithered) {
  if (!(signal_power > 0.0) || !std::isfinite(signal_power)) {
    throw InvalidConfigError("filtered signal power must be positive");
  }
  if (!config.integer_bits()) {
    throw InvalidConfigError("a realizable quantizer needs an integer bit depth, got " +
                             std::to_string(config.bits));
  }
  const DistortionConstants c = distortion_constants(config);
  return QuantizerSpec(std::sqrt(c.kappa_bar * signal_power), static_cast<int>(config.bits),
                       dithered);
}

double midrise(const QuantizerSpec& spec, double x) {
  if (!(std::abs(x) < spec.gamma())) {
    return std::copysign(spec.max_level(), x);
  }
  const double half = std::ldexp(1.0, spec.bits() - 1);
  // Rounding in x / delta can land one cell past the top for x just below gamma.
  const double m = std::clamp(std::floor(x / spec.delta()), -half, half - 1.0);
  return spec.delta() * (m + 0.5);
}

double draw_dither(const QuantizerSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> u(-0.5 * spec.delta(), 0.5 * spec.delta());
  const double a = u(rng);
  const double b = u(rng);
  return a + b;
}

QuantizedBlock quantize_stream(const QuantizerSpec& spec, std::span<const double> y, Rng& rng) {
  QuantizedBlock out;
  out.samples.resize(y.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double v = spec.dithered() ? y[n] + draw_dither(spec, rng) : y[n];
    if (!(std::abs(v) < spec.gamma())) ++out.overload_count;
    out.samples[n] = midrise(spec, v);
  }
  return out;
}

}  // namespace uadc
