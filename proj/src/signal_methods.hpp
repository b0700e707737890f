/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace sgsm {

/// One raw 1-D sensor sequence.
struct SignalSequence {
  std::vector<double> values;
  std::optional<double> sample_rate;  // Hz

  std::size_t length() const { return values.size(); }
};

enum class MethodKind {
  kRaw,
  kDft,
  kDwt,
  kHht,
  kPeriodogram,
  kMelBand,
  kExternal,
};

/// A registered signal-processing method: a mapping from length-L inputs to
/// length-L' transformed sequences. External channels carry precomputed
/// vectors and are resolved by the pipeline rather than by apply_method.
struct MethodSpec {
  MethodKind kind = MethodKind::kRaw;
  std::size_t input_length = 0;   // L
  std::size_t output_length = 0;  // L'

  int mel_band = 0;   // 1..4, kMelBand only
  int mel_bins = 64;  // spectrogram rows, kMelBand only

  int hht_track_length = 128;  // per-IMF amplitude samples, kHht only

  std::string external_name;             // kExternal only
  std::size_t external_length = 0;       // vector length in the source file

  /// Stable identifier used in filenames, mask reports, and manifests:
  /// "raw", "dft", "dwt", "hht", "periodogram", "mel1".."mel4", "ext_<name>".
  std::string id() const;

  /// The length the transform produces before any pad/truncate adjustment.
  std::size_t natural_output_length() const;

  /// Fills output_length from the natural length and checks invariants
  /// (L' >= 2, mel band in range, even L for spectral methods, ...).
  void finalize(std::size_t code_length);
};

MethodKind method_kind_from_string(const std::string& s);
std::string method_kind_to_string(MethodKind kind);

struct NormStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct TransformedSequence {
  std::vector<double> values;
  std::string method_id;
  std::optional<NormStats> normalization;

  std::size_t length() const { return values.size(); }
};

/// Empirical mode decomposition output. The elementwise sum of all IMFs plus
/// the residual reconstructs the analysed signal.
struct ImfSet {
  std::vector<std::vector<double>> imfs;
  std::vector<double> residual;
};

struct EmdOptions {
  int max_imfs = 6;
  int max_sift_iterations = 10;
  double sd_threshold = 0.3;
};

// --- core transforms ---------------------------------------------------

/// Magnitudes of the first L/2+1 DFT bins. L must be even and >= 8.
std::vector<double> dft_magnitude(const std::vector<double>& x);

/// Full-depth orthonormal Haar decomposition of a power-of-two-length input.
/// Layout: [final approximation, detail level m, detail level m-1, ...,
/// detail level 1] where level 1 is the finest. Energy preserving.
std::vector<double> dwt_haar(const std::vector<double>& x);

/// P[k] = |DFT(x)[k]|^2 / L for k = 0..L/2. Same preconditions as the DFT.
std::vector<double> periodogram(const std::vector<double>& x);

ImfSet emd(const std::vector<double>& x, const EmdOptions& options = {});

/// Instantaneous amplitude |analytic(x)| via the full-spectrum Hilbert
/// transform (zeroed negative frequencies, doubled positive ones).
std::vector<double> hilbert_amplitude(const std::vector<double>& x);

/// Concatenated instantaneous-amplitude tracks of the first three IMFs,
/// each resampled to track_length samples; missing IMFs contribute zeros.
std::vector<double> hht_features(const std::vector<double>& x,
                                 int track_length = 128,
                                 const EmdOptions& options = {});

/// Splits an [n_mels x T] spectrogram into four frequency quarters and sums
/// each quarter along the mel axis. Band 0 is the lowest-frequency quarter.
std::array<std::vector<double>, 4> mel_band_sequences(
    const std::vector<double>& spectrogram, std::size_t n_mels, std::size_t t);

/// Reads an SGTF matrix of precomputed vectors for an external channel.
std::vector<std::vector<double>> load_external_codes(const std::string& path,
                                                     std::size_t expected_length);

// --- shared helpers -----------------------------------------------------

/// Pads with zeros or truncates at the tail so that v has exactly `target`
/// entries.
std::vector<double> adjust_length(std::vector<double> v, std::size_t target);

/// Per-sequence z-score. Sequences with stddev <= 1e-8 map to all zeros.
std::vector<double> zscore(const std::vector<double>& v, NormStats& stats);

/// Linear-interpolation resampling to `target` samples (endpoints kept).
std::vector<double> resample_linear(const std::vector<double>& v,
                                    std::size_t target);

/// Dispatches to the concrete transform, adjusts the length to the spec's L'
/// and z-scores the result. External channels are rejected here; the
/// pipeline substitutes their file-sourced vectors.
TransformedSequence apply_method(const MethodSpec& spec,
                                 const SignalSequence& x);

/// Wraps an externally sourced vector as a channel input: length-adjusts to
/// the spec's L' and z-scores, exactly like apply_method does for transforms.
TransformedSequence wrap_external(const MethodSpec& spec,
                                  const std::vector<double>& vector);

}  // namespace sgsm
