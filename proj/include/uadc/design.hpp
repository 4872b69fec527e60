#pragma once

#include <complex>
#include <memory>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uadc/quantizer.hpp"
#include "uadc/spectra.hpp"

namespace uadc {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TmseMethod { proposed, pcm_baseline, adx_rect, generic };
std::string_view to_string(TmseMethod method);

struct TmseReport {
  double tmse = 0.0;
  double ntmse = 0.0;
  double sigma2 = 0.0;
  TmseMethod method = TmseMethod::generic;
  AdcConfig adc;
  double f_nyq = 0.0;
  // Set when a baseline is applied outside the setting it was derived for
  // (the brickwall PCM filter on a multimodal PSD).
  bool extrapolated = false;
};

// Squared magnitude |H(f)|^2 of a pre-sampling filter at a true frequency.
class Prefilter {
 public:
  using Response = std::function<double(double)>;

  Prefilter(std::string name, Response response)
      : name_(std::move(name)), response_(std::move(response)) {}

  double operator()(double f) const { return response_(f); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  Response response_;
};

// |H|^2 = 1 for |f| < cutoff, else 0.
Prefilter brickwall(double cutoff);

// |H|^2 sampled at every alias f_i - k f_s of every folded grid point f_i.
class AliasedResponse {
 public:
  explicit AliasedResponse(const FoldedSpectrum& folded);

  static AliasedResponse sample(const Prefilter& filter, const FoldedSpectrum& folded);

  std::size_t size() const { return grid_.size; }
  AliasRange span() const { return span_; }
  double f_s() const { return f_s_; }
  const FrequencyGrid& grid() const { return grid_; }
  double true_frequency(std::size_t i, int k) const { return grid_.at(i) - k * f_s_; }

  double at(std::size_t i, int k) const;
  void set(std::size_t i, int k, double value);

  std::vector<double>& raw() { return values_; }
  const std::vector<double>& raw() const { return values_; }

 private:
  std::size_t offset(std::size_t i, int k) const;

  FrequencyGrid grid_;
  double f_s_;
  AliasRange span_;
  std::vector<double> values_;
};

// Water-filling constraint kappa * T_s * int (sqrt(zeta * S~) - 1)^+ df on the
// folded midpoint grid. Equals one at the optimal level.
double water_filling_constraint(const FoldedSpectrum& folded, const AdcConfig& config,
                                double zeta);

// Level zeta that makes the water-filling constraint one. Bracketed bisection
// followed by an exact solve on the active set. Returns +inf in the kappa = 0
// limit. Throws std::invalid_argument for an all-zero spectrum and
// ConvergenceError if the bracket cannot be established.
double solve_zeta(const FoldedSpectrum& folded, const AdcConfig& config);

class RecoveryFilter;

struct FilterDesign {
  AdcConfig adc;
  FoldedSpectrum folded;
  AliasedResponse h2;
  Prefilter prefilter;
  // Water level; NaN when the prefilter does not come from water filling.
  double zeta = 0.0;
  // E{y^2} = int |H|^2 S_x df on the folded grid.
  double signal_power = 0.0;
  std::shared_ptr<const RecoveryFilter> g;

  // |H|^2 at the dominant alias of every folded grid point.
  std::vector<double> dominant_h2() const;
};

// Optimal pre-sampling filter: on the dominant alias of each folded frequency
// |H|^2 = (sqrt(zeta S~) - 1)^+ / (2^{2b} S~), zero on every other alias.
FilterDesign optimal_prefilter(const FoldedSpectrum& folded, const PsdModel& psd,
                               const AdcConfig& config);

// Same construction at a caller-chosen water level (for diagnostics).
FilterDesign prefilter_at_level(const FoldedSpectrum& folded, const PsdModel& psd,
                                const AdcConfig& config, double zeta);

// Wraps an arbitrary prefilter into a design on the given fold.
FilterDesign make_design(const Prefilter& prefilter, const FoldedSpectrum& folded,
                         const PsdModel& psd, const AdcConfig& config);

// Wiener recovery filter for a zero-phase prefilter:
// G(f) = S_x(f) H(f) / (S_y(f) + kappa T_s int S_y), S_y(f) = f_s sum_k |H|^2 S_x.
class RecoveryFilter {
 public:
  RecoveryFilter(Prefilter prefilter, PsdModel psd, double f_s, double noise_floor);

  std::complex<double> operator()(double f) const;
  // Folded output PSD S_y at frequency f (periodic in f_s).
  double output_psd(double f) const;
  // kappa T_s int S_y, the quantization-noise floor of S_z.
  double noise_floor() const { return noise_floor_; }

 private:
  Prefilter prefilter_;
  PsdModel psd_;
  double f_s_;
  double noise_floor_;
};

// Populates design.g. A design whose h2 vanishes yields G = 0.
FilterDesign recovery_filter(FilterDesign design, const PsdModel& psd);

// G sampled on a midpoint grid over (-f_nyq/2, f_nyq/2).
struct SampledRecovery {
  std::vector<double> frequency;
  std::vector<std::complex<double>> values;
};
SampledRecovery sample_recovery(const RecoveryFilter& g, double f_nyq, std::size_t size);

// Generic TMSE of any non-negative prefilter with its optimal recovery filter:
// int S_x - |H|^2 S_x^2 / (T_s S_z) df, evaluated on the fold of h2.
TmseReport tmse_for_prefilter(const AliasedResponse& h2, const PsdModel& psd,
                              const AdcConfig& config);

// Minimum TMSE in closed form from the water level.
TmseReport tmse_optimal(const FoldedSpectrum& folded, const PsdModel& psd,
                        const AdcConfig& config);

// The same expression at a given level (no solve).
TmseReport tmse_at_level(const FoldedSpectrum& folded, const PsdModel& psd,
                         const AdcConfig& config, double zeta);

enum class ClosedFormVariant { proposed, pcm, adx };
ClosedFormVariant parse_closed_form_variant(std::string_view name);

// Quantization constant of a non-uniform scalar quantizer for Gaussian input.
inline constexpr double kNonUniformGaussianCq = 2.7206990463513265;  // sqrt(3) pi / 2

// Normalized minimum TMSE for a rectangular PSD:
//   1 - min(f_s, f_nyq)/f_nyq * (1 + T_s min(f_s, f_nyq) X 2^{-2b})^{-1}
// with X = kappa_bar (proposed) or c_q (pcm), and (1 - 2^{-2b}) for adx.
TmseReport closed_form_rectangular(const AdcConfig& config, double f_nyq,
                                   ClosedFormVariant variant, double c_q = 0.0);

// Anti-aliasing brickwall at min(f_s, f_nyq)/2, the PCM baseline for unimodal PSDs.
Prefilter pcm_baseline_prefilter(const PsdModel& psd, double f_s);

// PCM baseline TMSE: the brickwall evaluated with this quantizer model.
// Flags multimodal (tabulated) inputs as extrapolated.
TmseReport tmse_pcm_baseline(const PsdModel& psd, const AdcConfig& config,
                             std::size_t grid_size = kDefaultGridSize);

}  // namespace uadc
