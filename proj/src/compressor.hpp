/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neural.hpp"
#include "signal_methods.hpp"

namespace sgsm {

/// Phase one: an undercomplete autoencoder for one method channel. The
/// encoder maps a length-L' transformed sequence to a length-d code; the
/// decoder reconstructs the sequence from the code. d < L' is enforced at
/// construction so an identity mapping is structurally impossible.
struct CompressorModel {
  std::string method_id;
  std::size_t input_length = 0;  // L'
  std::size_t code_length = 0;   // d
  Network encoder;
  Network decoder;

  /// Encoder: two strided convolutions that widen the channel count,
  /// then two linear layers down to the code. Decoder: two linear layers
  /// back to the input length.
  static CompressorModel create(std::string method_id, std::size_t input_length,
                                std::size_t code_length, std::uint64_t seed);

  /// Smallest input length the convolutional front end accepts.
  static constexpr std::size_t kMinInputLength = 15;

  std::vector<float> encode(const TransformedSequence& t) const;
  std::vector<float> encode_values(std::span<const float> values) const;
  std::vector<float> decode(std::span<const float> code) const;
};

/// Minibatch reconstruction training under the MSE+cosine loss. Returns the
/// per-epoch mean loss over all samples. Deterministic given cfg.seed.
TrainLog train_compressor(CompressorModel& model,
                          const std::vector<TransformedSequence>& dataset,
                          const TrainConfig& cfg);

/// Same loop over pre-packed rows ([count x input_length], row-major).
TrainLog train_compressor_rows(CompressorModel& model,
                               const std::vector<float>& rows,
                               std::size_t count, const TrainConfig& cfg);

}  // namespace sgsm
