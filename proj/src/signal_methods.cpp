/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "signal_methods.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"
#include "fft.hpp"

namespace sgsm {
namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw InvalidArgument(std::string("non-finite value in ") + what);
    }
  }
}

void require_even_spectral_input(std::size_t n) {
  if (n < 8 || n % 2 != 0) {
    throw InvalidArgument("spectral transforms need an even length >= 8");
  }
}

// ---- natural cubic spline through (pos, val) knots ----------------------

struct Spline {
  std::vector<double> pos, val, second;

  // Natural boundary conditions; falls back to a line for two knots.
  Spline(std::vector<double> p, std::vector<double> v)
      : pos(std::move(p)), val(std::move(v)), second(pos.size(), 0.0) {
    const std::size_t n = pos.size();
    if (n < 3) return;
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), sub(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = pos[i] - pos[i - 1];
      const double h1 = pos[i + 1] - pos[i];
      sub[i] = h0;
      diag[i] = 2.0 * (h0 + h1);
      rhs[i] = 6.0 * ((val[i + 1] - val[i]) / h1 - (val[i] - val[i - 1]) / h0);
    }
    // Thomas solve on the interior rows, natural ends stay zero.
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * (pos[i] - pos[i - 1]);
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      const double upper = pos[i + 1] - pos[i];
      second[i] = (rhs[i] - upper * second[i + 1]) / diag[i];
      if (i == 1) break;
    }
  }

  double operator()(double x) const {
    const std::size_t n = pos.size();
    if (n == 1) return val[0];
    std::size_t hi = 1;
    while (hi + 1 < n && pos[hi] < x) ++hi;
    const std::size_t lo = hi - 1;
    const double h = pos[hi] - pos[lo];
    if (n == 2 || h <= 0.0) {
      const double t = h > 0.0 ? (x - pos[lo]) / h : 0.0;
      return val[lo] + t * (val[hi] - val[lo]);
    }
    const double a = (pos[hi] - x) / h;
    const double b = (x - pos[lo]) / h;
    return a * val[lo] + b * val[hi] +
           ((a * a * a - a) * second[lo] + (b * b * b - b) * second[hi]) *
               (h * h) / 6.0;
  }
};

struct Extrema {
  std::vector<std::size_t> maxima;
  std::vector<std::size_t> minima;

  std::size_t total() const { return maxima.size() + minima.size(); }
};

// Interior extrema from difference sign changes; plateaus contribute their
// midpoint.
Extrema find_extrema(const std::vector<double>& x) {
  Extrema e;
  const std::size_t n = x.size();
  double prev_diff = 0.0;
  std::size_t last_move = 0;  // start of the plateau ending at the current point
  for (std::size_t k = 1; k < n; ++k) {
    const double d = x[k] - x[k - 1];
    if (d == 0.0) continue;
    if (prev_diff > 0.0 && d < 0.0) {
      e.maxima.push_back(last_move + (k - 1 - last_move) / 2);
    } else if (prev_diff < 0.0 && d > 0.0) {
      e.minima.push_back(last_move + (k - 1 - last_move) / 2);
    }
    prev_diff = d;
    last_move = k;
  }
  return e;
}

// Spline envelope through the given extrema with two mirrored knots per side.
std::vector<double> envelope(const std::vector<double>& x,
                             const std::vector<std::size_t>& idx) {
  const std::size_t n = x.size();
  std::vector<double> pos, val;
  const std::size_t mirror = std::min<std::size_t>(2, idx.size());
  for (std::size_t j = mirror; j >= 1; --j) {
    pos.push_back(-static_cast<double>(idx[j - 1]));
    val.push_back(x[idx[j - 1]]);
  }
  for (auto i : idx) {
    pos.push_back(static_cast<double>(i));
    val.push_back(x[i]);
  }
  const double right = 2.0 * static_cast<double>(n - 1);
  for (std::size_t j = 0; j < mirror; ++j) {
    const std::size_t src = idx[idx.size() - 1 - j];
    pos.push_back(right - static_cast<double>(src));
    val.push_back(x[src]);
  }
  Spline s(std::move(pos), std::move(val));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = s(static_cast<double>(i));
  return out;
}

}  // namespace

std::string MethodSpec::id() const {
  switch (kind) {
    case MethodKind::kRaw: return "raw";
    case MethodKind::kDft: return "dft";
    case MethodKind::kDwt: return "dwt";
    case MethodKind::kHht: return "hht";
    case MethodKind::kPeriodogram: return "periodogram";
    case MethodKind::kMelBand: return "mel" + std::to_string(mel_band);
    case MethodKind::kExternal: return "ext_" + external_name;
  }
  throw InvalidArgument("unknown method kind");
}

std::size_t MethodSpec::natural_output_length() const {
  switch (kind) {
    case MethodKind::kRaw: return input_length;
    case MethodKind::kDft: return input_length / 2 + 1;
    case MethodKind::kDwt: return input_length;
    case MethodKind::kHht: return 3 * static_cast<std::size_t>(hht_track_length);
    case MethodKind::kPeriodogram: return input_length / 2 + 1;
    case MethodKind::kMelBand:
      return input_length / static_cast<std::size_t>(mel_bins);
    case MethodKind::kExternal: return external_length;
  }
  throw InvalidArgument("unknown method kind");
}

void MethodSpec::finalize(std::size_t code_length) {
  if (input_length < 8) {
    throw ConfigError("method " + id() + ": input length must be >= 8");
  }
  switch (kind) {
    case MethodKind::kDft:
    case MethodKind::kPeriodogram:
      if (input_length % 2 != 0) {
        throw ConfigError("method " + id() + " needs an even input length");
      }
      break;
    case MethodKind::kDwt:
      if ((input_length & (input_length - 1)) != 0) {
        throw ConfigError("method dwt needs a power-of-two input length");
      }
      break;
    case MethodKind::kMelBand:
      if (mel_band < 1 || mel_band > 4) {
        throw ConfigError("mel band index must be in [1, 4]");
      }
      if (mel_bins <= 0 || mel_bins % 4 != 0) {
        throw ConfigError("mel bin count must be positive and divisible by 4");
      }
      if (input_length % static_cast<std::size_t>(mel_bins) != 0) {
        throw ConfigError(
            "mel channels need input length divisible by the mel bin count");
      }
      break;
    case MethodKind::kHht:
      if (hht_track_length < 2) {
        throw ConfigError("hht track length must be >= 2");
      }
      break;
    case MethodKind::kExternal:
      if (external_name.empty()) {
        throw ConfigError("external channels need a name");
      }
      if (external_length < 2) {
        throw ConfigError("external channel " + external_name +
                          ": vector length must be >= 2");
      }
      break;
    default:
      break;
  }
  if (output_length == 0) output_length = natural_output_length();
  if (output_length < 2) {
    throw ConfigError("method " + id() + ": output length must be >= 2");
  }
  if (code_length > 0 && output_length <= code_length) {
    throw ConfigError("method " + id() +
                      ": output length must exceed the code length to keep "
                      "the autoencoder undercomplete");
  }
}

MethodKind method_kind_from_string(const std::string& s) {
  if (s == "raw") return MethodKind::kRaw;
  if (s == "dft") return MethodKind::kDft;
  if (s == "dwt") return MethodKind::kDwt;
  if (s == "hht") return MethodKind::kHht;
  if (s == "periodogram") return MethodKind::kPeriodogram;
  if (s == "mel_band") return MethodKind::kMelBand;
  if (s == "external") return MethodKind::kExternal;
  throw ConfigError("unknown method kind: " + s);
}

std::string method_kind_to_string(MethodKind kind) {
  switch (kind) {
    case MethodKind::kRaw: return "raw";
    case MethodKind::kDft: return "dft";
    case MethodKind::kDwt: return "dwt";
    case MethodKind::kHht: return "hht";
    case MethodKind::kPeriodogram: return "periodogram";
    case MethodKind::kMelBand: return "mel_band";
    case MethodKind::kExternal: return "external";
  }
  throw InvalidArgument("unknown method kind");
}

std::vector<double> dft_magnitude(const std::vector<double>& x) {
  require_even_spectral_input(x.size());
  const auto spectrum = fft::dft_real(x);
  std::vector<double> mag(x.size() / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(spectrum[k]);
  return mag;
}

std::vector<double> dwt_haar(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2 || (n & (n - 1)) != 0) {
    throw InvalidArgument("haar dwt needs a power-of-two length >= 2");
  }
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  std::vector<double> out(n);
  std::vector<double> approx = x;
  std::size_t write_end = n;
  while (approx.size() > 1) {
    const std::size_t half = approx.size() / 2;
    std::vector<double> next(half), detail(half);
    for (std::size_t i = 0; i < half; ++i) {
      next[i] = (approx[2 * i] + approx[2 * i + 1]) * kInvSqrt2;
      detail[i] = (approx[2 * i] - approx[2 * i + 1]) * kInvSqrt2;
    }
    std::copy(detail.begin(), detail.end(), out.begin() + (write_end - half));
    write_end -= half;
    approx = std::move(next);
  }
  out[0] = approx[0];
  return out;
}

std::vector<double> periodogram(const std::vector<double>& x) {
  require_even_spectral_input(x.size());
  const auto spectrum = fft::dft_real(x);
  const double inv_l = 1.0 / static_cast<double>(x.size());
  std::vector<double> p(x.size() / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::norm(spectrum[k]) * inv_l;
  }
  return p;
}

ImfSet emd(const std::vector<double>& x, const EmdOptions& options) {
  require_finite(x, "emd input");
  ImfSet result;
  result.residual = x;
  if (x.size() < 8) return result;

  while (static_cast<int>(result.imfs.size()) < options.max_imfs) {
    const Extrema re = find_extrema(result.residual);
    if (re.total() < 4 || re.maxima.size() < 2 || re.minima.size() < 2) break;

    std::vector<double> h = result.residual;
    bool sifted = false;
    for (int iter = 0; iter < options.max_sift_iterations; ++iter) {
      const Extrema he = find_extrema(h);
      if (he.maxima.size() < 2 || he.minima.size() < 2) break;
      const auto upper = envelope(h, he.maxima);
      const auto lower = envelope(h, he.minima);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        const double mean = 0.5 * (upper[i] + lower[i]);
        num += mean * mean;
        den += h[i] * h[i];
        h[i] -= mean;
      }
      sifted = true;
      if (num / std::max(den, 1e-300) < options.sd_threshold) break;
    }
    if (!sifted) break;

    for (std::size_t i = 0; i < h.size(); ++i) result.residual[i] -= h[i];
    result.imfs.push_back(std::move(h));
  }
  return result;
}

std::vector<double> hilbert_amplitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return std::vector<double>(n, x.empty() ? 0.0 : std::abs(x[0]));
  auto spectrum = fft::dft_real(x);
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (n % 2 == 0 && k == half) continue;  // Nyquist stays untouched
    if (k < half || (n % 2 == 1 && k <= half)) {
      spectrum[k] *= 2.0;
    } else {
      spectrum[k] = {0.0, 0.0};
    }
  }
  const auto analytic = fft::idft(std::move(spectrum));
  std::vector<double> amp(n);
  for (std::size_t i = 0; i < n; ++i) amp[i] = std::abs(analytic[i]);
  return amp;
}

std::vector<double> hht_features(const std::vector<double>& x, int track_length,
                                 const EmdOptions& options) {
  if (track_length < 2) throw InvalidArgument("hht track length must be >= 2");
  const auto decomposition = emd(x, options);
  constexpr std::size_t kTracks = 3;
  std::vector<double> out;
  out.reserve(kTracks * static_cast<std::size_t>(track_length));
  for (std::size_t t = 0; t < kTracks; ++t) {
    if (t < decomposition.imfs.size()) {
      const auto amp = hilbert_amplitude(decomposition.imfs[t]);
      const auto track = resample_linear(amp, static_cast<std::size_t>(track_length));
      out.insert(out.end(), track.begin(), track.end());
    } else {
      out.insert(out.end(), static_cast<std::size_t>(track_length), 0.0);
    }
  }
  return out;
}

std::array<std::vector<double>, 4> mel_band_sequences(
    const std::vector<double>& spectrogram, std::size_t n_mels, std::size_t t) {
  if (n_mels == 0 || n_mels % 4 != 0) {
    throw InvalidArgument("mel bin count must be divisible by 4");
  }
  if (spectrogram.size() != n_mels * t) {
    throw InvalidArgument("spectrogram size does not match n_mels x T");
  }
  std::array<std::vector<double>, 4> bands;
  const std::size_t quarter = n_mels / 4;
  for (std::size_t b = 0; b < 4; ++b) {
    bands[b].assign(t, 0.0);
    for (std::size_t row = b * quarter; row < (b + 1) * quarter; ++row) {
      const double* src = spectrogram.data() + row * t;
      for (std::size_t col = 0; col < t; ++col) bands[b][col] += src[col];
    }
  }
  return bands;
}

std::vector<std::vector<double>> load_external_codes(const std::string& path,
                                                     std::size_t expected_length) {
  const Tensor t = sgtf::read(path);
  if (t.ndim() != 2) {
    throw DataError("external code file must be a 2-D SGTF matrix: " + path);
  }
  if (t.dim(1) != expected_length) {
    throw DataError("external code length mismatch in " + path + ": expected " +
                    std::to_string(expected_length) + ", found " +
                    std::to_string(t.dim(1)));
  }
  const std::size_t rows = static_cast<std::size_t>(t.dim(0));
  const std::size_t cols = static_cast<std::size_t>(t.dim(1));
  std::vector<std::vector<double>> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r].resize(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      out[r][c] = static_cast<double>(t.values[r * cols + c]);
    }
  }
  return out;
}

std::vector<double> adjust_length(std::vector<double> v, std::size_t target) {
  v.resize(target, 0.0);
  return v;
}

std::vector<double> zscore(const std::vector<double>& v, NormStats& stats) {
  const std::size_t n = v.size();
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double stddev = n > 0 ? std::sqrt(var / static_cast<double>(n)) : 0.0;
  stats = {mean, stddev};
  std::vector<double> out(n, 0.0);
  if (stddev > 1e-8) {
    const double inv = 1.0 / stddev;
    for (std::size_t i = 0; i < n; ++i) out[i] = (v[i] - mean) * inv;
  }
  return out;
}

std::vector<double> resample_linear(const std::vector<double>& v,
                                    std::size_t target) {
  if (target == 0) return {};
  if (v.empty()) return std::vector<double>(target, 0.0);
  if (v.size() == target) return v;
  std::vector<double> out(target);
  if (v.size() == 1 || target == 1) {
    std::fill(out.begin(), out.end(), v[0]);
    return out;
  }
  const double step = static_cast<double>(v.size() - 1) /
                      static_cast<double>(target - 1);
  for (std::size_t i = 0; i < target; ++i) {
    const double p = static_cast<double>(i) * step;
    const std::size_t lo = std::min(static_cast<std::size_t>(p), v.size() - 2);
    const double frac = p - static_cast<double>(lo);
    out[i] = v[lo] + frac * (v[lo + 1] - v[lo]);
  }
  return out;
}

TransformedSequence apply_method(const MethodSpec& spec,
                                 const SignalSequence& x) {
  if (spec.kind == MethodKind::kExternal) {
    throw InvalidArgument(
        "external channels read precomputed vectors; apply_method cannot "
        "synthesize them");
  }
  if (x.length() != spec.input_length) {
    throw InvalidArgument("input length " + std::to_string(x.length()) +
                          " does not match method " + spec.id() + " (L=" +
                          std::to_string(spec.input_length) + ")");
  }
  require_finite(x.values, "signal sequence");

  std::vector<double> raw;
  switch (spec.kind) {
    case MethodKind::kRaw:
      raw = x.values;
      break;
    case MethodKind::kDft:
      raw = dft_magnitude(x.values);
      break;
    case MethodKind::kDwt:
      raw = dwt_haar(x.values);
      break;
    case MethodKind::kHht:
      raw = hht_features(x.values, spec.hht_track_length);
      break;
    case MethodKind::kPeriodogram:
      raw = periodogram(x.values);
      break;
    case MethodKind::kMelBand: {
      const std::size_t n_mels = static_cast<std::size_t>(spec.mel_bins);
      const std::size_t t = x.length() / n_mels;
      std::vector<double> compressed(x.values.size());
      for (std::size_t i = 0; i < x.values.size(); ++i) {
        compressed[i] = std::log1p(std::max(x.values[i], 0.0));
      }
      raw = mel_band_sequences(compressed, n_mels, t)[spec.mel_band - 1];
      break;
    }
    case MethodKind::kExternal:
      break;  // unreachable
  }

  TransformedSequence out;
  out.method_id = spec.id();
  NormStats stats;
  out.values = zscore(adjust_length(std::move(raw), spec.output_length), stats);
  out.normalization = stats;
  return out;
}

TransformedSequence wrap_external(const MethodSpec& spec,
                                  const std::vector<double>& vector) {
  if (spec.kind != MethodKind::kExternal) {
    throw InvalidArgument("wrap_external is only valid for external channels");
  }
  if (vector.size() != spec.external_length) {
    throw DataError("external vector length mismatch for channel " +
                    spec.external_name);
  }
  require_finite(vector, "external vector");
  TransformedSequence out;
  out.method_id = spec.id();
  NormStats stats;
  out.values = zscore(adjust_length(vector, spec.output_length), stats);
  out.normalization = stats;
  return out;
}

}  // namespace sgsm
