#include "uadc/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>
#include <new>
#include <stdexcept>
#include <utility>

namespace uadc {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("FFT length must be at least 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = fftw_alloc_real(n_);
  auto* c = fftw_alloc_complex(bins());
  complex_ = c;
  if (real_ == nullptr || c == nullptr) {
    release();
    throw std::bad_alloc();
  }
  const int len = static_cast<int>(n_);
  forward_plan_ = fftw_plan_dft_r2c_1d(len, real_, c, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(len, c, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : n_(std::exchange(other.n_, 0)),
      real_(std::exchange(other.real_, nullptr)),
      complex_(std::exchange(other.complex_, nullptr)),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    n_ = std::exchange(other.n_, 0);
    real_ = std::exchange(other.real_, nullptr);
    complex_ = std::exchange(other.complex_, nullptr);
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void RealFft::release() {
  if (real_ == nullptr && complex_ == nullptr) return;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(complex_);
  forward_plan_ = inverse_plan_ = nullptr;
  real_ = nullptr;
  complex_ = nullptr;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  if (in.size() != n_ || out.size() != bins()) throw std::invalid_argument("FFT size mismatch");
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::memcpy(out.data(), complex_, bins() * sizeof(fftw_complex));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  if (in.size() != bins() || out.size() != n_) throw std::invalid_argument("FFT size mismatch");
  // c2r overwrites its input, so transform from the owned buffer.
  std::memcpy(complex_, in.data(), bins() * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  std::copy(real_, real_ + n_, out.begin());
}

}  // namespace uadc
