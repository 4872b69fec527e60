#include <doctest.h>

#include <cmath>
#include <random>

#include "uadc/quantizer.hpp"
#include "uadc/random.hpp"

using namespace uadc;

TEST_CASE("overload schedule grows linearly with bit depth") {
  CHECK(eta_schedule(3) == doctest::Approx(2.5));
  CHECK(eta_schedule(1) == doctest::Approx(2.0));
  CHECK(eta_schedule(8) == doctest::Approx(3.75));
  const AdcConfig c = scheduled_adc(0.5, 4);
  CHECK(c.f_s == 0.5);
  CHECK(c.eta == doctest::Approx(2.75));
  CHECK(c.bit_rate() == doctest::Approx(2.0));
}

TEST_CASE("distortion constants") {
  const DistortionConstants c = distortion_constants({1.0, 3.0, 2.5});
  // eta^2 / (1 - 2 eta^2 / (3 * 64)) and its 2^{-6} multiple.
  const double kappa_bar = 6.25 / (1.0 - 12.5 / 192.0);
  CHECK(c.kappa_bar == doctest::Approx(kappa_bar).scale(0.0).epsilon(1e-14));
  CHECK(c.kappa_bar == doctest::Approx(6.68524).scale(0.0).epsilon(1e-6));
  CHECK(c.kappa == doctest::Approx(0.104457).scale(0.0).epsilon(1e-5));

  const DistortionConstants one = distortion_constants({1.0, 1.0, 2.0});
  CHECK(one.kappa_bar == doctest::Approx(12.0));
  CHECK(one.kappa == doctest::Approx(3.0));

  const DistortionConstants fine = distortion_constants({1.0, 40.0, 2.5});
  CHECK(fine.kappa_bar == doctest::Approx(6.25).scale(0.0).epsilon(1e-12));
  CHECK(fine.kappa < 1e-20);
  CHECK(distortion_constants({1.0, 2000.0, 2.5}).kappa == 0.0);
}

TEST_CASE("infeasible overload factors are configuration errors") {
  // 2 eta^2 / (3 * 4) >= 1 for eta >= sqrt(6).
  CHECK_THROWS_AS(distortion_constants({1.0, 1.0, 2.5}), InvalidConfigError);
  CHECK_THROWS_AS(distortion_constants({1.0, 0.5, 2.0}), InvalidConfigError);
  CHECK_THROWS_AS(validate(AdcConfig{0.0, 3.0, 2.5}), InvalidConfigError);
  CHECK_THROWS_AS(validate(AdcConfig{1.0, -1.0, 2.5}), InvalidConfigError);
  CHECK_THROWS_AS(validate(AdcConfig{1.0, 3.0, 0.0}), InvalidConfigError);
  CHECK(effective_noise_power({1.0, 3.0, 2.5}, 2.0) ==
        doctest::Approx(2.0 * distortion_constants({1.0, 3.0, 2.5}).kappa));
}

TEST_CASE("dynamic range from the filtered signal power") {
  const QuantizerSpec q = dynamic_range({1.0, 3.0, 2.5}, 1.0);
  CHECK(q.gamma() == doctest::Approx(2.58558).scale(0.0).epsilon(1e-5));
  CHECK(q.delta() == doctest::Approx(0.646396).scale(0.0).epsilon(1e-5));
  CHECK(q.dithered());
  const QuantizerSpec quarter = dynamic_range({1.0, 3.0, 2.5}, 0.25);
  CHECK(quarter.gamma() == doctest::Approx(0.5 * q.gamma()).scale(0.0).epsilon(1e-14));
  // Fine quantizers: gamma tends to eta times the standard deviation.
  CHECK(dynamic_range({1.0, 24.0, 2.5}, 4.0).gamma() == doctest::Approx(5.0).scale(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(dynamic_range({1.0, 3.5, 2.5}, 1.0), InvalidConfigError);
  CHECK_THROWS_AS(dynamic_range({1.0, 3.0, 2.5}, 0.0), InvalidConfigError);
}

TEST_CASE("mid-rise quantizer cells and saturation") {
  const QuantizerSpec q(1.0, 2, false);
  CHECK(q.delta() == doctest::Approx(0.5));
  CHECK(midrise(q, 0.3) == doctest::Approx(0.25));
  CHECK(midrise(q, 5.0) == doctest::Approx(0.75));
  CHECK(midrise(q, -5.0) == doctest::Approx(-0.75));
  CHECK(midrise(q, -0.5) == doctest::Approx(-0.25));
  CHECK(midrise(q, 0.0) == doctest::Approx(0.25));
  CHECK(midrise(q, std::nextafter(1.0, 0.0)) == doctest::Approx(0.75));
  CHECK(q.levels() == std::vector<double>{-0.75, -0.25, 0.25, 0.75});
}

TEST_CASE("every output lies on the level lattice") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int bits : {1, 2, 3, 5, 8}) {
    const QuantizerSpec q(2.0, bits, false);
    const double half = std::ldexp(1.0, bits - 1);
    for (int i = 0; i < 2000; ++i) {
      const double z = midrise(q, n(rng));
      const double m = z / q.delta() - 0.5;
      CHECK(m == std::round(m));
      CHECK(m >= -half);
      CHECK(m <= half - 1.0);
    }
  }
}

TEST_CASE("triangular dither moments and support") {
  const QuantizerSpec q(1.0, 2, true);  // delta = 0.5
  Rng rng = derive_stream(11, 0, kDitherLane);
  constexpr int n = 1'000'000;
  double sum = 0.0;
  double sq = 0.0;
  bool bounded = true;
  for (int i = 0; i < n; ++i) {
    const double w = draw_dither(q, rng);
    bounded = bounded && std::abs(w) <= 0.5;
    sum += w;
    sq += w * w;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(bounded);
  CHECK(std::abs(mean) < 3.0 * std::sqrt(var / n));
  CHECK(var == doctest::Approx(0.25 / 6.0).scale(0.0).epsilon(0.01));
}

TEST_CASE("quantizing silence without dither gives the lowest positive level") {
  const QuantizerSpec q(1.3, 3, false);
  Rng rng = derive_stream(1, 0, kDitherLane);
  const std::vector<double> y(100, 0.0);
  const QuantizedBlock z = quantize_stream(q, y, rng);
  for (double v : z.samples) CHECK(v == doctest::Approx(0.5 * q.delta()));
  CHECK(z.overload_count == 0);
}

TEST_CASE("dithered error on Gaussian input: overload bound and moments") {
  const QuantizerSpec q = dynamic_range({1.0, 3.0, 2.5}, 1.0);
  Rng input = derive_stream(5, 0, kProcessLane);
  Rng dither = derive_stream(5, 0, kDitherLane);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr std::size_t n = 1'000'000;
  std::vector<double> y(n);
  for (double& v : y) v = normal(input);
  const QuantizedBlock z = quantize_stream(q, y, dither);
  const double overload = static_cast<double>(z.overload_count) / n;
  CHECK(overload <= 1.0 / (2.5 * 2.5));
  CHECK(overload < 0.02);

  // Wider range so overload does not distort the error moments.
  const QuantizerSpec wide = dynamic_range({1.0, 4.0, 6.0}, 1.0);
  const QuantizedBlock zw = quantize_stream(wide, y, dither);
  double mean = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = zw.samples[i] - y[i];
    mean += e;
    sq += e * e;
  }
  mean /= n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 5.0 * std::sqrt(var / n));
  CHECK(var == doctest::Approx(wide.delta() * wide.delta() / 4.0).scale(0.0).epsilon(0.02));
}

TEST_CASE("derived streams are reproducible and distinct") {
  Rng a = derive_stream(42, 3, kProcessLane);
  Rng b = derive_stream(42, 3, kProcessLane);
  Rng c = derive_stream(42, 3, kDitherLane);
  Rng d = derive_stream(42, 4, kProcessLane);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}
