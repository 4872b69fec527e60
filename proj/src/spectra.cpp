#include "uadc/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uadc {

namespace {

// Gaussian shape exp(-f^2 / width^2) with width chosen for the 3-dB point.
double gaussian_width(double f_nyq) {
  return 0.25 * f_nyq / std::sqrt(std::numbers::ln2);
}

void require_positive_band(double f_nyq) {
  if (!(f_nyq > 0.0) || !std::isfinite(f_nyq)) {
    throw std::invalid_argument("PSD support width f_nyq must be positive, got " +
                                std::to_string(f_nyq));
  }
}

}  // namespace

std::string_view to_string(PsdKind kind) {
  switch (kind) {
    case PsdKind::rectangular:
      return "rectangular";
    case PsdKind::triangular:
      return "triangular";
    case PsdKind::gaussian3db:
      return "gaussian3db";
    case PsdKind::tabulated:
      return "tabulated";
  }
  return "unknown";
}

PsdKind parse_psd_kind(std::string_view name) {
  if (name == "rectangular" || name == "rect") return PsdKind::rectangular;
  if (name == "triangular" || name == "triang") return PsdKind::triangular;
  if (name == "gaussian3db" || name == "gaussian" || name == "gauss") {
    return PsdKind::gaussian3db;
  }
  if (name == "tabulated") return PsdKind::tabulated;
  throw std::invalid_argument("unknown PSD kind '" + std::string(name) + "'");
}

PsdModel::PsdModel(PsdKind kind, double f_nyq, std::vector<PsdKnot> knots)
    : kind_(kind), f_nyq_(f_nyq), knots_(std::move(knots)) {
  require_positive_band(f_nyq);
}

PsdModel PsdModel::rectangular(double f_nyq) {
  return PsdModel(PsdKind::rectangular, f_nyq);
}

PsdModel PsdModel::triangular(double f_nyq) {
  return PsdModel(PsdKind::triangular, f_nyq);
}

PsdModel PsdModel::gaussian3db(double f_nyq) {
  return PsdModel(PsdKind::gaussian3db, f_nyq);
}

PsdModel PsdModel::tabulated(double f_nyq, std::vector<PsdKnot> knots) {
  require_positive_band(f_nyq);
  if (knots.empty()) throw std::invalid_argument("tabulated PSD needs at least one knot");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto& k = knots[i];
    if (!std::isfinite(k.frequency) || !std::isfinite(k.density)) {
      throw std::invalid_argument("tabulated PSD knot is not finite");
    }
    if (k.density < 0.0) throw std::invalid_argument("tabulated PSD has a negative density");
    if (k.frequency < 0.0 || k.frequency > 0.5 * f_nyq) {
      throw std::invalid_argument("tabulated PSD knot frequency outside [0, f_nyq/2]");
    }
    if (i > 0 && !(k.frequency > knots[i - 1].frequency)) {
      throw std::invalid_argument("tabulated PSD knots must be strictly increasing");
    }
  }
  return PsdModel(PsdKind::tabulated, f_nyq, std::move(knots));
}

double PsdModel::shape(double abs_f) const {
  switch (kind_) {
    case PsdKind::rectangular:
      return 1.0;
    case PsdKind::triangular:
      return 1.0 - 2.0 * abs_f / f_nyq_;
    case PsdKind::gaussian3db: {
      const double u = abs_f / gaussian_width(f_nyq_);
      return std::exp(-u * u);
    }
    case PsdKind::tabulated: {
      if (abs_f < knots_.front().frequency) {
        return knots_.front().density;
      }
      if (abs_f > knots_.back().frequency) return 0.0;
      auto hi = std::upper_bound(knots_.begin(), knots_.end(), abs_f,
                                 [](double f, const PsdKnot& k) { return f < k.frequency; });
      if (hi == knots_.end()) return knots_.back().density;
      auto lo = hi - 1;
      const double t = (abs_f - lo->frequency) / (hi->frequency - lo->frequency);
      return lo->density + t * (hi->density - lo->density);
    }
  }
  return 0.0;
}

double PsdModel::operator()(double f) const {
  const double a = std::abs(f);
  if (!(a < 0.5 * f_nyq_)) return 0.0;
  return power_scale_ * shape(a);
}

double PsdModel::shape_power() const {
  switch (kind_) {
    case PsdKind::rectangular:
      return f_nyq_;
    case PsdKind::triangular:
      return 0.5 * f_nyq_;
    case PsdKind::gaussian3db: {
      const double w = gaussian_width(f_nyq_);
      return w * std::sqrt(std::numbers::pi) * std::erf(0.5 * f_nyq_ / w);
    }
    case PsdKind::tabulated: {
      // Flat extension below the first knot, trapezoids between knots.
      double one_sided = knots_.front().frequency * knots_.front().density;
      for (std::size_t i = 1; i < knots_.size(); ++i) {
        one_sided += 0.5 * (knots_[i].density + knots_[i - 1].density) *
                     (knots_[i].frequency - knots_[i - 1].frequency);
      }
      return 2.0 * one_sided;
    }
  }
  return 0.0;
}

double PsdModel::power() const { return power_scale_ * shape_power(); }

PsdModel PsdModel::scaled(double factor) const {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw std::invalid_argument("PSD scale factor must be finite and non-negative");
  }
  PsdModel out = *this;
  out.power_scale_ *= factor;
  return out;
}

double eval_psd(const PsdModel& model, double f) { return model(f); }

PsdModel normalize_unit_power(const PsdModel& model) {
  const double p = model.power();
  if (!(p > 0.0)) throw std::invalid_argument("cannot normalize a zero-power PSD");
  return model.scaled(1.0 / p);
}

PsdModel make_gaussian3db(double f_nyq) {
  return normalize_unit_power(PsdModel::gaussian3db(f_nyq));
}

PsdModel make_unit_psd(PsdKind kind, double f_nyq) {
  switch (kind) {
    case PsdKind::rectangular:
      return normalize_unit_power(PsdModel::rectangular(f_nyq));
    case PsdKind::triangular:
      return normalize_unit_power(PsdModel::triangular(f_nyq));
    case PsdKind::gaussian3db:
      return make_gaussian3db(f_nyq);
    case PsdKind::tabulated:
      break;
  }
  throw std::invalid_argument("tabulated PSDs need an explicit table");
}

PsdModel make_bimodal_psd(double f_nyq) {
  const double h = 0.5 * f_nyq;
  return normalize_unit_power(PsdModel::tabulated(
      f_nyq, {{0.0, 1.0}, {0.1 * h, 0.1}, {0.5 * h, 0.1}, {0.64 * h, 0.8}, {0.8 * h, 0.1},
              {h, 0.0}}));
}

AliasRange feasible_aliases(double f, double f_s, double f_nyq) {
  const double half = 0.5 * f_nyq;
  // Strict inequalities at both ends of (f - half, f + half) / f_s.
  AliasRange r;
  r.first = static_cast<int>(std::floor((f - half) / f_s)) + 1;
  r.last = static_cast<int>(std::ceil((f + half) / f_s)) - 1;
  return r;
}

DominantAlias dominant_alias(const PsdModel& model, double f, double f_s) {
  DominantAlias best{0, model(f)};
  const AliasRange r = feasible_aliases(f, f_s, model.f_nyq());
  for (int k = r.first; k <= r.last; ++k) {
    if (k == 0) continue;
    const double d = model(f - k * f_s);
    const bool better =
        d > best.density ||
        (d == best.density && (std::abs(k) < std::abs(best.index) ||
                               (std::abs(k) == std::abs(best.index) && k > best.index)));
    if (better) best = {k, d};
  }
  return best;
}

AliasRange FoldedSpectrum::alias_span() const {
  AliasRange lo = feasible_aliases(-0.5 * f_s, f_s, f_nyq);
  AliasRange hi = feasible_aliases(0.5 * f_s, f_s, f_nyq);
  return {std::min(lo.first, 0), std::max(hi.last, 0)};
}

FoldedSpectrum fold(const PsdModel& model, double f_s, std::size_t grid_size) {
  if (!(f_s > 0.0) || !std::isfinite(f_s)) {
    throw std::invalid_argument("sampling rate must be positive");
  }
  if (grid_size < 2) throw std::invalid_argument("fold grid needs at least two points");
  FoldedSpectrum out;
  out.grid = {std::min(f_s, model.f_nyq()), grid_size};
  out.f_s = f_s;
  out.f_nyq = model.f_nyq();
  out.values.resize(grid_size);
  out.fold_index.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const DominantAlias a = dominant_alias(model, out.grid.at(i), f_s);
    out.values[i] = a.density;
    out.fold_index[i] = a.index;
  }
  return out;
}

}  // namespace uadc
