#pragma once

#include <complex>
#include <span>
#include <vector>

namespace forte {

/// Mixed-radix complex FFT (forward, unnormalized) for any length. Lengths
/// with small prime factors are fast; a large prime factor falls back to a
/// generic O(p^2) butterfly.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }
  void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const;

 private:
  void work(std::complex<double>* out, const std::complex<double>* in, std::size_t fstride,
            std::size_t factor_index) const;
  void butterfly(std::complex<double>* out, std::size_t fstride, std::size_t p, std::size_t m) const;

  std::size_t n_;
  std::vector<std::size_t> factors_;  // (radix, remaining length) pairs
  std::vector<std::complex<double>> twiddles_;
  mutable std::vector<std::complex<double>> scratch_;
};

/// Forward DFT of a real sequence of even length via a half-length complex
/// transform. Produces bins 0..n/2 inclusive.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;

 private:
  std::size_t n_;
  FftPlan half_;
  std::vector<std::complex<double>> split_twiddles_;
  mutable std::vector<std::complex<double>> packed_;
  mutable std::vector<std::complex<double>> spectrum_;
};

}  // namespace forte
