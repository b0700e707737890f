/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "fft.hpp"

#include <cmath>

namespace sgsm::fft {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2, n a power of two.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& v : a) v /= static_cast<double>(n);
  }
}

// Bluestein chirp-z for arbitrary n, built on the power-of-two kernel.
std::vector<std::complex<double>> bluestein(
    const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  const std::size_t m = next_pow2(2 * n - 1);

  // chirp[k] = exp(-i*pi*k^2/n); k^2 taken mod 2n keeps the argument small.
  std::vector<std::complex<double>> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double e = static_cast<double>((k * k) % (2 * n));
    const double ang = -3.14159265358979323846264338328 * e / static_cast<double>(n);
    chirp[k] = {std::cos(ang), std::sin(ang)};
  }

  std::vector<std::complex<double>> a(m, {0.0, 0.0});
  std::vector<std::complex<double>> b(m, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = b[m - k] = std::conj(chirp[k]);
  }

  fft_pow2(a, false);
  fft_pow2(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_pow2(a, true);

  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k];
  return out;
}

}  // namespace

std::vector<std::complex<double>> dft(std::vector<std::complex<double>> x) {
  if (x.size() <= 1) return x;
  if (is_pow2(x.size())) {
    fft_pow2(x, false);
    return x;
  }
  return bluestein(x);
}

std::vector<std::complex<double>> idft(std::vector<std::complex<double>> x) {
  const std::size_t n = x.size();
  if (n <= 1) return x;
  if (is_pow2(n)) {
    fft_pow2(x, true);
    return x;
  }
  for (auto& v : x) v = std::conj(v);
  auto y = bluestein(x);
  for (auto& v : y) v = std::conj(v) / static_cast<double>(n);
  return y;
}

std::vector<std::complex<double>> dft_real(const std::vector<double>& x) {
  std::vector<std::complex<double>> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = {x[i], 0.0};
  return dft(std::move(c));
}

}  // namespace sgsm::fft
