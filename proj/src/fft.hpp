/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <complex>
#include <vector>

namespace sgsm::fft {

/// Forward DFT of a complex sequence, any length >= 1.
/// Power-of-two lengths run radix-2 Cooley-Tukey, others go through Bluestein.
std::vector<std::complex<double>> dft(std::vector<std::complex<double>> x);

/// Inverse DFT (includes the 1/N factor).
std::vector<std::complex<double>> idft(std::vector<std::complex<double>> x);

std::vector<std::complex<double>> dft_real(const std::vector<double>& x);

}  // namespace sgsm::fft
