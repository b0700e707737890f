/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neural.hpp"
#include "rng.hpp"

namespace sgsm {

/// Per-channel usage mask. String form is one 'T' (open) or 'F' (closed)
/// per channel, first registered channel first, e.g. "TTFTF".
struct MaskConfig {
  std::vector<bool> open;

  static MaskConfig from_string(const std::string& s);
  static MaskConfig all_open(std::size_t n);
  std::string to_string() const;
  std::size_t channel_count() const { return open.size(); }
  std::size_t open_count() const;

  /// Throws unless at least one channel is open.
  void validate() const;

  bool operator==(const MaskConfig& other) const = default;
};

/// Concatenation of n channel codes of uniform length d, in registry order.
/// Channel i occupies [i*d, (i+1)*d).
struct ConcatCode {
  std::vector<float> values;
  std::size_t channel_count = 0;
  std::size_t code_length = 0;

  std::size_t length() const { return values.size(); }
};

ConcatCode concat_codes(const std::vector<std::vector<float>>& codes);

/// Fraction of positions zeroed by the global-mask policy.
inline constexpr double kGlobalMaskFraction = 0.10;
/// Probability that a training presentation draws the global-mask policy
/// (the channel-mask policy covers the rest).
inline constexpr double kGlobalPolicyProbability = 0.80;
/// Per-channel closing probability under the channel-mask policy.
inline constexpr double kChannelCloseProbability = 0.50;

/// Zeroes exactly round(0.10 * length) positions chosen uniformly without
/// replacement; every other position is untouched.
std::vector<float> apply_global_mask(const ConcatCode& v, Rng& rng);

/// Zeroes the d entries of every closed channel.
std::vector<float> apply_channel_mask(const ConcatCode& v,
                                      const MaskConfig& mask);

enum class MaskPolicy { kGlobal, kChannel };

struct MaskDraw {
  MaskPolicy policy = MaskPolicy::kGlobal;
  std::vector<float> masked;
  MaskConfig channels;  // meaningful for the channel policy
};

/// Training-time corruption: global-mask with probability 0.8, otherwise
/// each channel closes independently at 0.5 with the all-closed outcome
/// rejected and redrawn.
MaskDraw sample_training_mask(const ConcatCode& v, Rng& rng);

/// Test instrumentation: counts apply_global_mask invocations so inference
/// paths can be shown to never take the global-mask route.
namespace mask_stats {
void reset();
std::uint64_t global_mask_applications();
}  // namespace mask_stats

/// Phase two: masked denoising autoencoder over concatenated codes. Encoder
/// and decoder share the same widths (n*d -> 4*n*d -> n*d) with independent
/// weights; the encoder output is the embedding.
struct MixerModel {
  std::size_t channel_count = 0;  // n
  std::size_t code_length = 0;    // d
  Network encoder;
  Network decoder;

  static MixerModel create(std::size_t channel_count, std::size_t code_length,
                           std::uint64_t seed);

  std::size_t embedding_length() const { return channel_count * code_length; }

  /// E = encoder(channel_mask(V)). Deterministic; only the channel-mask
  /// policy is ever applied at inference.
  std::vector<float> embed(const ConcatCode& v, const MaskConfig& mask) const;
};

/// Denoising training: every presentation re-masks its input independently
/// and the loss compares the reconstruction against the unmasked code.
TrainLog train_mixer(MixerModel& model, const std::vector<ConcatCode>& dataset,
                     const TrainConfig& cfg);

}  // namespace sgsm
