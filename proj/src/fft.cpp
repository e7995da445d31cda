#include "forte/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace forte {

using cplx = std::complex<double>;

namespace {

// Plain complex product; std::complex operator* carries inf/NaN recovery that
// costs a library call per multiply.
inline cplx mul(const cplx& a, const cplx& b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("FftPlan: length must be positive");
  twiddles_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    twiddles_[i] = {std::cos(phase), std::sin(phase)};
  }
  // Factor radix-4 first, then 2, 3, 5, then any remaining odd factors.
  std::size_t rest = n;
  std::size_t p = 4;
  while (rest > 1) {
    while (rest % p != 0) {
      switch (p) {
        case 4: p = 2; break;
        case 2: p = 3; break;
        default: p += 2; break;
      }
      if (p * p > rest) p = rest;
    }
    rest /= p;
    factors_.push_back(p);
    factors_.push_back(rest);
  }
  std::size_t max_radix = 1;
  for (std::size_t i = 0; i < factors_.size(); i += 2) max_radix = std::max(max_radix, factors_[i]);
  scratch_.resize(max_radix);
}

void FftPlan::forward(std::span<const cplx> in, std::span<cplx> out) const {
  if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("FftPlan::forward: size mismatch");
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  work(out.data(), in.data(), 1, 0);
}

void FftPlan::work(cplx* out, const cplx* in, std::size_t fstride, std::size_t fi) const {
  const std::size_t p = factors_[fi];
  const std::size_t m = factors_[fi + 1];
  const cplx* const out_end = out + p * m;
  if (m == 1) {
    for (cplx* o = out; o != out_end; ++o, in += fstride) *o = *in;
  } else {
    for (cplx* o = out; o != out_end; o += m, in += fstride) work(o, in, fstride * p, fi + 2);
  }
  butterfly(out, fstride, p, m);
}

void FftPlan::butterfly(cplx* out, std::size_t fstride, std::size_t p, std::size_t m) const {
  if (p == 2) {
    for (std::size_t k = 0; k < m; ++k) {
      const cplx t = mul(out[k + m], twiddles_[k * fstride]);
      out[k + m] = out[k] - t;
      out[k] += t;
    }
    return;
  }
  if (p == 4) {
    for (std::size_t k = 0; k < m; ++k) {
      const cplx a0 = out[k];
      const cplx a1 = mul(out[k + m], twiddles_[k * fstride]);
      const cplx a2 = mul(out[k + 2 * m], twiddles_[2 * k * fstride]);
      const cplx a3 = mul(out[k + 3 * m], twiddles_[3 * k * fstride]);
      const cplx s02 = a0 + a2, d02 = a0 - a2;
      const cplx s13 = a1 + a3, d13 = a1 - a3;
      const cplx d13_rot{d13.imag(), -d13.real()};  // -j * d13
      out[k] = s02 + s13;
      out[k + m] = d02 + d13_rot;
      out[k + 2 * m] = s02 - s13;
      out[k + 3 * m] = d02 - d13_rot;
    }
    return;
  }
  if (p == 5) {
    // Rotations by 2 pi / 5 and 4 pi / 5.
    const cplx ya = twiddles_[fstride * m];
    const cplx yb = twiddles_[2 * fstride * m];
    for (std::size_t u = 0; u < m; ++u) {
      const cplx s0 = out[u];
      const cplx s1 = mul(out[u + m], twiddles_[u * fstride]);
      const cplx s2 = mul(out[u + 2 * m], twiddles_[2 * u * fstride]);
      const cplx s3 = mul(out[u + 3 * m], twiddles_[3 * u * fstride]);
      const cplx s4 = mul(out[u + 4 * m], twiddles_[4 * u * fstride]);
      const cplx s7 = s1 + s4, s10 = s1 - s4;
      const cplx s8 = s2 + s3, s9 = s2 - s3;
      out[u] = s0 + s7 + s8;
      const cplx s5{s0.real() + s7.real() * ya.real() + s8.real() * yb.real(),
                    s0.imag() + s7.imag() * ya.real() + s8.imag() * yb.real()};
      const cplx s6{s10.imag() * ya.imag() + s9.imag() * yb.imag(),
                    -s10.real() * ya.imag() - s9.real() * yb.imag()};
      out[u + m] = s5 - s6;
      out[u + 4 * m] = s5 + s6;
      const cplx s11{s0.real() + s7.real() * yb.real() + s8.real() * ya.real(),
                     s0.imag() + s7.imag() * yb.real() + s8.imag() * ya.real()};
      const cplx s12{-s10.imag() * yb.imag() + s9.imag() * ya.imag(),
                     s10.real() * yb.imag() - s9.real() * ya.imag()};
      out[u + 2 * m] = s11 + s12;
      out[u + 3 * m] = s11 - s12;
    }
    return;
  }
  // Generic radix-p butterfly.
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t q = 0, k = u; q < p; ++q, k += m) scratch_[q] = out[k];
    for (std::size_t q1 = 0, k = u; q1 < p; ++q1, k += m) {
      std::size_t tw = 0;
      cplx acc = scratch_[0];
      for (std::size_t q = 1; q < p; ++q) {
        tw += fstride * k;
        if (tw >= n_) tw %= n_;
        acc += mul(scratch_[q], twiddles_[tw]);
      }
      out[k] = acc;
    }
  }
}

// ---------------------------------------------------------------------------

RealFft::RealFft(std::size_t n) : n_(n), half_(n / 2 == 0 ? 1 : n / 2) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("RealFft: length must be even and >= 2");
  const std::size_t h = n / 2;
  split_twiddles_.resize(h + 1);
  for (std::size_t k = 0; k <= h; ++k) {
    const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    split_twiddles_[k] = {std::cos(phase), std::sin(phase)};
  }
  packed_.resize(h);
  spectrum_.resize(h);
}

void RealFft::forward(std::span<const double> in, std::span<cplx> out) const {
  const std::size_t h = n_ / 2;
  if (in.size() != n_ || out.size() < h + 1) throw std::invalid_argument("RealFft::forward: size mismatch");
  for (std::size_t i = 0; i < h; ++i) packed_[i] = {in[2 * i], in[2 * i + 1]};
  half_.forward(packed_, spectrum_);
  // X[k] = E[k] + W^k O[k] with E, O the spectra of the even and odd samples.
  for (std::size_t k = 0; k <= h; ++k) {
    const cplx zk = spectrum_[k % h];
    const cplx zc = std::conj(spectrum_[(h - k) % h]);
    const cplx even = 0.5 * (zk + zc);
    const cplx diff = zk - zc;
    const cplx odd{0.5 * diff.imag(), -0.5 * diff.real()};
    out[k] = even + mul(split_twiddles_[k], odd);
  }
}

}  // namespace forte
