#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace uadc {

inline constexpr std::size_t kDefaultGridSize = 4096;

enum class PsdKind { rectangular, triangular, gaussian3db, tabulated };

std::string_view to_string(PsdKind kind);
PsdKind parse_psd_kind(std::string_view name);

// One knot of a tabulated one-sided shape. The density at negative
// frequencies mirrors the knot at |f|.
struct PsdKnot {
  double frequency = 0.0;
  double density = 0.0;
};

// Baseband power spectral density bandlimited to (-f_nyq/2, f_nyq/2).
//
// Shapes (before power_scale):
//   rectangular  1
//   triangular   1 - 2|f|/f_nyq
//   gaussian3db  exp(-ln2 * f^2 / (f_nyq/4)^2), so S(f_nyq/4) = S(0)/2
//   tabulated    piecewise-linear through the knots, zero past the last knot
//
// Instances are immutable; rescaling returns a new model.
class PsdModel {
 public:
  static PsdModel rectangular(double f_nyq);
  static PsdModel triangular(double f_nyq);
  static PsdModel gaussian3db(double f_nyq);
  // Knots must have non-negative, strictly increasing frequencies inside
  // [0, f_nyq/2] and non-negative densities.
  static PsdModel tabulated(double f_nyq, std::vector<PsdKnot> knots);

  double operator()(double f) const;

  // Exact integral of S over the real line.
  double power() const;

  PsdModel scaled(double factor) const;

  PsdKind kind() const { return kind_; }
  double f_nyq() const { return f_nyq_; }
  double power_scale() const { return power_scale_; }
  const std::vector<PsdKnot>& knots() const { return knots_; }

 private:
  PsdModel(PsdKind kind, double f_nyq, std::vector<PsdKnot> knots = {});

  double shape(double abs_f) const;
  double shape_power() const;

  PsdKind kind_;
  double f_nyq_;
  double power_scale_ = 1.0;
  std::vector<PsdKnot> knots_;
};

double eval_psd(const PsdModel& model, double f);

// Rescales so that the total power is one. Throws std::invalid_argument for
// a zero-power model.
PsdModel normalize_unit_power(const PsdModel& model);

// Unit-power Gaussian PSD with a 3-dB bandwidth of f_nyq/2, truncated to the
// support.
PsdModel make_gaussian3db(double f_nyq);

// Constructs a unit-power model by name: rectangular, triangular, gaussian3db.
PsdModel make_unit_psd(PsdKind kind, double f_nyq);

// Two-mode PSD in the spirit of an out-of-band-heavy multimodal input: a
// central lobe and a stronger lobe near the band edge. Unit power.
PsdModel make_bimodal_psd(double f_nyq);

// Uniform midpoint grid over (-width/2, width/2).
struct FrequencyGrid {
  double width = 0.0;
  std::size_t size = 0;

  double step() const { return width / static_cast<double>(size); }
  double at(std::size_t i) const {
    return -0.5 * width + (static_cast<double>(i) + 0.5) * step();
  }
};

// Aliases k with |f - k f_s| < f_nyq/2, as an inclusive range. Empty when
// first > last.
struct AliasRange {
  int first = 0;
  int last = -1;
};
AliasRange feasible_aliases(double f, double f_s, double f_nyq);

struct DominantAlias {
  int index = 0;
  double density = 0.0;
};

// argmax_k S(f - k f_s). Ties go to the smallest |k|, then to the positive k.
DominantAlias dominant_alias(const PsdModel& model, double f, double f_s);

// S folded onto (-f_s/2, f_s/2): for every grid point the dominant alias
// density and its index. The grid covers (-w/2, w/2) with w = min(f_s, f_nyq),
// outside of which the folded spectrum vanishes, so the support edges of a
// band-limited PSD always fall on bin edges.
struct FoldedSpectrum {
  FrequencyGrid grid;
  double f_s = 0.0;
  double f_nyq = 0.0;
  std::vector<double> values;
  std::vector<int> fold_index;

  std::size_t size() const { return values.size(); }
  double bin_width() const { return grid.step(); }
  double frequency(std::size_t i) const { return grid.at(i); }
  // True frequency of the dominant alias at grid point i.
  double source_frequency(std::size_t i) const {
    return grid.at(i) - fold_index[i] * f_s;
  }
  AliasRange alias_span() const;
};

FoldedSpectrum fold(const PsdModel& model, double f_s,
                    std::size_t grid_size = kDefaultGridSize);

}  // namespace uadc
