#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace uadc {

// Real <-> half-complex transforms of a fixed length, backed by FFTW.
//
// forward:  X[k] = sum_m x[m] exp(-j 2 pi k m / n),  k = 0..n/2
// inverse:  x[m] = sum_k X[k] exp(+j 2 pi k m / n)   (unnormalized, Hermitian)
//
// Plans are created under a process-wide lock; executing distinct instances
// from different threads is safe.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  void release();

  std::size_t n_ = 0;
  double* real_ = nullptr;
  void* complex_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace uadc
