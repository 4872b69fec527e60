#include "uadc/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace uadc {

namespace {

constexpr int kMaxBisections = 200;
constexpr int kMaxBracketExpansions = 4096;

// Water level expressed through its square root r = sqrt(zeta), which stays
// finite long after zeta itself would overflow.
struct WaterLevel {
  double root = 0.0;
  DistortionConstants constants;
};

// Per-bin allocation p = kappa (r sqrt(S~) - 1)^+, i.e. kappa_bar |H|^2 S~.
// The constraint reads T_s int p df = 1.
double allocation(double root, double s_tilde, double kappa) {
  if (!(s_tilde > 0.0)) return 0.0;
  const double a = root * std::sqrt(s_tilde) - 1.0;
  return a > 0.0 ? kappa * a : 0.0;
}

// Allocations on the folded grid. In the kappa = 0 limit they become the
// whitening profile sqrt(S~) / (T_s int sqrt(S~)).
std::vector<double> allocations(const FoldedSpectrum& folded, const WaterLevel& level,
                                const AdcConfig& config) {
  std::vector<double> p(folded.size(), 0.0);
  const double kappa = level.constants.kappa;
  if (kappa > 0.0 && std::isfinite(level.root)) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = allocation(level.root, folded.values[i], kappa);
    return p;
  }
  double mass = 0.0;
  for (double s : folded.values) mass += std::sqrt(std::max(s, 0.0));
  mass *= folded.bin_width() * config.sampling_period();
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = folded.values[i] > 0.0 ? std::sqrt(folded.values[i]) / mass : 0.0;
  }
  return p;
}

double constraint_at_root(const FoldedSpectrum& folded, const AdcConfig& config, double kappa,
                          double root) {
  double sum = 0.0;
  for (double s : folded.values) {
    if (!(s > 0.0)) continue;
    const double a = root * std::sqrt(s) - 1.0;
    if (a > 0.0) sum += a;
  }
  return kappa * config.sampling_period() * folded.bin_width() * sum;
}

double peak_density(const FoldedSpectrum& folded) {
  double peak = 0.0;
  for (double s : folded.values) peak = std::max(peak, s);
  return peak;
}

WaterLevel solve_level(const FoldedSpectrum& folded, const AdcConfig& config) {
  WaterLevel level;
  level.constants = distortion_constants(config);
  const double peak = peak_density(folded);
  if (!(peak > 0.0)) {
    throw std::invalid_argument("folded spectrum is identically zero: no signal in band");
  }
  const double kappa = level.constants.kappa;
  if (!(kappa > 0.0)) {
    level.root = std::numeric_limits<double>::infinity();
    return level;
  }
  auto phi = [&](double r) { return constraint_at_root(folded, config, kappa, r); };

  double lo = 1.0 / std::sqrt(peak);
  double hi = 2.0 * lo;
  int expansions = 0;
  while (!(phi(hi) > 1.0)) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > kMaxBracketExpansions || !std::isfinite(hi)) {
      throw ConvergenceError("could not bracket the water level");
    }
  }
  for (int it = 0; it < kMaxBisections && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi;
       ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 1.0 ? hi : lo) = mid;
  }

  // On a fixed active set the constraint is linear in r, so solve it exactly
  // and keep the result if the active set is self-consistent.
  double active = 0.0;
  double root_mass = 0.0;
  for (double s : folded.values) {
    if (s > 0.0 && hi * std::sqrt(s) > 1.0) {
      active += 1.0;
      root_mass += std::sqrt(s);
    }
  }
  double root = 0.5 * (lo + hi);
  if (root_mass > 0.0) {
    const double exact =
        (1.0 / (kappa * config.sampling_period() * folded.bin_width()) + active) / root_mass;
    bool consistent = true;
    for (double s : folded.values) {
      if (!(s > 0.0)) continue;
      const bool in_hi = hi * std::sqrt(s) > 1.0;
      const bool in_exact = exact * std::sqrt(s) > 1.0;
      if (in_hi != in_exact) {
        consistent = false;
        break;
      }
    }
    if (consistent) root = exact;
  }
  if (!(std::abs(phi(root) - 1.0) <= 1e-10)) {
    throw ConvergenceError("water level did not converge: constraint residual " +
                           std::to_string(phi(root) - 1.0));
  }
  level.root = root;
  return level;
}

double total_power(const PsdModel& psd) { return psd.power(); }

TmseReport make_report(double tmse, const PsdModel& psd, const AdcConfig& config,
                       TmseMethod method) {
  TmseReport r;
  r.sigma2 = total_power(psd);
  r.tmse = tmse;
  r.ntmse = r.sigma2 > 0.0 ? tmse / r.sigma2 : 0.0;
  r.method = method;
  r.adc = config;
  r.f_nyq = psd.f_nyq();
  return r;
}

// |H|^2 = p / (kappa_bar S~) on the dominant alias.
double h2_from_allocation(double p, double s_tilde, double kappa_bar) {
  return (p > 0.0 && s_tilde > 0.0) ? p / (kappa_bar * s_tilde) : 0.0;
}

FilterDesign design_from_level(const FoldedSpectrum& folded, const PsdModel& psd,
                               const AdcConfig& config, const WaterLevel& level) {
  const std::vector<double> p = allocations(folded, level, config);
  AliasedResponse h2(folded);
  double power = 0.0;
  for (std::size_t i = 0; i < folded.size(); ++i) {
    const double v = h2_from_allocation(p[i], folded.values[i], level.constants.kappa_bar);
    h2.set(i, folded.fold_index[i], v);
    power += v * folded.values[i];
  }
  power *= folded.bin_width();

  // Off-grid evaluation re-derives the dominant alias at the folded frequency.
  // The normalizing mass for the kappa = 0 limit is taken from the grid.
  const double f_s = folded.f_s;
  const double t_s = config.sampling_period();
  const DistortionConstants constants = level.constants;
  const double root = level.root;
  double whitening_mass = 0.0;
  if (!(constants.kappa > 0.0 && std::isfinite(root))) {
    for (double s : folded.values) whitening_mass += std::sqrt(std::max(s, 0.0));
    whitening_mass *= folded.bin_width() * t_s;
  }
  Prefilter response("water_filling", [psd, f_s, constants, root, whitening_mass](double f) {
    const double k = std::nearbyint(f / f_s);
    const double folded_f = f - k * f_s;
    const DominantAlias a = dominant_alias(psd, folded_f, f_s);
    if (a.index != static_cast<int>(k) || !(a.density > 0.0)) return 0.0;
    const double p = whitening_mass > 0.0 ? std::sqrt(a.density) / whitening_mass
                                          : allocation(root, a.density, constants.kappa);
    return h2_from_allocation(p, a.density, constants.kappa_bar);
  });

  const double zeta = root * root;
  return FilterDesign{config, folded, std::move(h2), std::move(response), zeta, power, nullptr};
}

}  // namespace

std::string_view to_string(TmseMethod method) {
  switch (method) {
    case TmseMethod::proposed:
      return "proposed";
    case TmseMethod::pcm_baseline:
      return "pcm_baseline";
    case TmseMethod::adx_rect:
      return "adx_rect";
    case TmseMethod::generic:
      return "generic";
  }
  return "unknown";
}

Prefilter brickwall(double cutoff) {
  return Prefilter("brickwall", [cutoff](double f) { return std::abs(f) < cutoff ? 1.0 : 0.0; });
}

AliasedResponse::AliasedResponse(const FoldedSpectrum& folded)
    : grid_(folded.grid), f_s_(folded.f_s), span_(folded.alias_span()) {
  const auto width = static_cast<std::size_t>(span_.last - span_.first + 1);
  values_.assign(grid_.size * width, 0.0);
}

std::size_t AliasedResponse::offset(std::size_t i, int k) const {
  if (i >= grid_.size || k < span_.first || k > span_.last) {
    throw std::out_of_range("alias index outside the response span");
  }
  const auto width = static_cast<std::size_t>(span_.last - span_.first + 1);
  return i * width + static_cast<std::size_t>(k - span_.first);
}

double AliasedResponse::at(std::size_t i, int k) const {
  if (k < span_.first || k > span_.last) return 0.0;
  return values_[offset(i, k)];
}

void AliasedResponse::set(std::size_t i, int k, double value) {
  if (!(value >= 0.0)) throw std::invalid_argument("|H|^2 must be non-negative");
  values_[offset(i, k)] = value;
}

AliasedResponse AliasedResponse::sample(const Prefilter& filter, const FoldedSpectrum& folded) {
  AliasedResponse out(folded);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (int k = out.span_.first; k <= out.span_.last; ++k) {
      out.set(i, k, filter(out.true_frequency(i, k)));
    }
  }
  return out;
}

std::vector<double> FilterDesign::dominant_h2() const {
  std::vector<double> out(folded.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = h2.at(i, folded.fold_index[i]);
  return out;
}

double water_filling_constraint(const FoldedSpectrum& folded, const AdcConfig& config,
                                double zeta) {
  const DistortionConstants c = distortion_constants(config);
  if (!(c.kappa > 0.0) && std::isinf(zeta)) return 1.0;
  return constraint_at_root(folded, config, c.kappa, std::sqrt(zeta));
}

double solve_zeta(const FoldedSpectrum& folded, const AdcConfig& config) {
  const WaterLevel level = solve_level(folded, config);
  return level.root * level.root;
}

FilterDesign optimal_prefilter(const FoldedSpectrum& folded, const PsdModel& psd,
                               const AdcConfig& config) {
  return design_from_level(folded, psd, config, solve_level(folded, config));
}

FilterDesign prefilter_at_level(const FoldedSpectrum& folded, const PsdModel& psd,
                                const AdcConfig& config, double zeta) {
  WaterLevel level{std::sqrt(zeta), distortion_constants(config)};
  return design_from_level(folded, psd, config, level);
}

FilterDesign make_design(const Prefilter& prefilter, const FoldedSpectrum& folded,
                         const PsdModel& psd, const AdcConfig& config) {
  validate(config);
  AliasedResponse h2 = AliasedResponse::sample(prefilter, folded);
  double power = 0.0;
  for (std::size_t i = 0; i < h2.size(); ++i) {
    for (int k = h2.span().first; k <= h2.span().last; ++k) {
      const double v = h2.at(i, k);
      if (v > 0.0) power += v * psd(h2.true_frequency(i, k));
    }
  }
  power *= folded.bin_width();
  return FilterDesign{config, folded, std::move(h2), prefilter,
                      std::numeric_limits<double>::quiet_NaN(), power, nullptr};
}

RecoveryFilter::RecoveryFilter(Prefilter prefilter, PsdModel psd, double f_s, double noise_floor)
    : prefilter_(std::move(prefilter)), psd_(std::move(psd)), f_s_(f_s), noise_floor_(noise_floor) {}

double RecoveryFilter::output_psd(double f) const {
  const AliasRange r = feasible_aliases(f, f_s_, psd_.f_nyq());
  double sum = 0.0;
  for (int k = r.first; k <= r.last; ++k) {
    const double fk = f - k * f_s_;
    const double s = psd_(fk);
    if (s > 0.0) sum += prefilter_(fk) * s;
  }
  return f_s_ * sum;
}

std::complex<double> RecoveryFilter::operator()(double f) const {
  const double s = psd_(f);
  if (!(s > 0.0)) return {0.0, 0.0};
  const double h2 = prefilter_(f);
  if (!(h2 > 0.0)) return {0.0, 0.0};
  const double denom = output_psd(f) + noise_floor_;
  if (!(denom > 0.0)) return {0.0, 0.0};
  // Zero-phase H, so G is real and even.
  return {s * std::sqrt(h2) / denom, 0.0};
}

FilterDesign recovery_filter(FilterDesign design, const PsdModel& psd) {
  const DistortionConstants c = distortion_constants(design.adc);
  // kappa T_s int S_y df = kappa E{y^2}.
  const double noise_floor = c.kappa * design.signal_power;
  design.g = std::make_shared<const RecoveryFilter>(design.prefilter, psd, design.adc.f_s,
                                                    noise_floor);
  return design;
}

SampledRecovery sample_recovery(const RecoveryFilter& g, double f_nyq, std::size_t size) {
  const FrequencyGrid grid{f_nyq, size};
  SampledRecovery out;
  out.frequency.resize(size);
  out.values.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    out.frequency[i] = grid.at(i);
    out.values[i] = g(grid.at(i));
  }
  return out;
}

TmseReport tmse_for_prefilter(const AliasedResponse& h2, const PsdModel& psd,
                              const AdcConfig& config) {
  const DistortionConstants c = distortion_constants(config);
  const double f_s = config.f_s;
  const double t_s = config.sampling_period();
  const double df = h2.grid().step();
  const std::size_t n = h2.size();
  const AliasRange span = h2.span();

  // S_y at each folded point and its band integral.
  std::vector<double> s_y(n, 0.0);
  double s_y_integral = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = span.first; k <= span.last; ++k) {
      const double v = h2.at(i, k);
      if (v > 0.0) acc += v * psd(h2.true_frequency(i, k));
    }
    s_y[i] = f_s * acc;
    s_y_integral += s_y[i];
  }
  s_y_integral *= df;
  const double noise = c.kappa * t_s * s_y_integral;

  double captured = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s_z = s_y[i] + noise;
    if (!(s_z > 0.0)) continue;
    double acc = 0.0;
    for (int k = span.first; k <= span.last; ++k) {
      const double v = h2.at(i, k);
      if (!(v > 0.0)) continue;
      const double s = psd(h2.true_frequency(i, k));
      acc += v * s * s;
    }
    captured += acc / (t_s * s_z);
  }
  captured *= df;
  // Without aliasing the grid covers the support; measure the power on it so
  // quadrature error cancels between the two terms.
  double power = total_power(psd);
  if (f_s >= psd.f_nyq() && h2.grid().width >= psd.f_nyq()) {
    power = 0.0;
    for (std::size_t i = 0; i < n; ++i) power += psd(h2.grid().at(i));
    power *= df;
  }
  return make_report(power - captured, psd, config, TmseMethod::generic);
}

TmseReport tmse_at_level(const FoldedSpectrum& folded, const PsdModel& psd,
                         const AdcConfig& config, double zeta) {
  WaterLevel level{std::sqrt(zeta), distortion_constants(config)};
  const std::vector<double> p = allocations(folded, level, config);
  const double kappa = level.constants.kappa;
  // P - int S~ a / (a + 1) split as (P - int S~) + int S~ / (a + 1), which
  // avoids cancellation when the error is small. 1 / (a + 1) = kappa / (p + kappa).
  double folded_power = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < folded.size(); ++i) {
    const double s = folded.values[i];
    folded_power += s;
    if (!(p[i] > 0.0)) {
      residual += s;
    } else if (kappa > 0.0) {
      residual += s * kappa / (p[i] + kappa);
    }
  }
  // Without aliasing the folded band holds all of the power; the grid sum
  // would only add quadrature error.
  const double uncaptured = folded.f_s >= folded.f_nyq
                                ? 0.0
                                : total_power(psd) - folded_power * folded.bin_width();
  const double tmse = uncaptured + residual * folded.bin_width();
  return make_report(tmse, psd, config, TmseMethod::proposed);
}

TmseReport tmse_optimal(const FoldedSpectrum& folded, const PsdModel& psd,
                        const AdcConfig& config) {
  const WaterLevel level = solve_level(folded, config);
  return tmse_at_level(folded, psd, config, level.root * level.root);
}

ClosedFormVariant parse_closed_form_variant(std::string_view name) {
  if (name == "proposed") return ClosedFormVariant::proposed;
  if (name == "pcm") return ClosedFormVariant::pcm;
  if (name == "adx") return ClosedFormVariant::adx;
  throw std::invalid_argument("unknown closed-form variant '" + std::string(name) + "'");
}

TmseReport closed_form_rectangular(const AdcConfig& config, double f_nyq,
                                   ClosedFormVariant variant, double c_q) {
  const DistortionConstants c = distortion_constants(config);
  const double captured_band = std::min(config.f_s, f_nyq);
  const double inv_levels2 = std::exp2(-2.0 * config.bits);
  double gain = 0.0;
  TmseMethod method = TmseMethod::proposed;
  switch (variant) {
    case ClosedFormVariant::proposed:
      gain = 1.0 / (1.0 + config.sampling_period() * captured_band * c.kappa_bar * inv_levels2);
      break;
    case ClosedFormVariant::pcm:
      if (!(c_q > 0.0)) throw std::invalid_argument("PCM closed form needs a positive c_q");
      gain = 1.0 / (1.0 + config.sampling_period() * captured_band * c_q * inv_levels2);
      method = TmseMethod::pcm_baseline;
      break;
    case ClosedFormVariant::adx:
      gain = 1.0 - inv_levels2;
      method = TmseMethod::adx_rect;
      break;
  }
  TmseReport r;
  r.sigma2 = 1.0;
  r.ntmse = 1.0 - captured_band / f_nyq * gain;
  r.tmse = r.ntmse;
  r.method = method;
  r.adc = config;
  r.f_nyq = f_nyq;
  return r;
}

Prefilter pcm_baseline_prefilter(const PsdModel& psd, double f_s) {
  return brickwall(0.5 * std::min(f_s, psd.f_nyq()));
}

TmseReport tmse_pcm_baseline(const PsdModel& psd, const AdcConfig& config,
                             std::size_t grid_size) {
  const FoldedSpectrum folded = fold(psd, config.f_s, grid_size);
  const AliasedResponse h2 =
      AliasedResponse::sample(pcm_baseline_prefilter(psd, config.f_s), folded);
  TmseReport r = tmse_for_prefilter(h2, psd, config);
  r.method = TmseMethod::pcm_baseline;
  r.extrapolated = psd.kind() == PsdKind::tabulated;
  return r;
}

}  // namespace uadc
