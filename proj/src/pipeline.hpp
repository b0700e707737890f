/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "compressor.hpp"
#include "mixer.hpp"
#include "selection.hpp"
#include "signal_methods.hpp"
#include "tensor.hpp"

namespace sgsm {

struct SynthConfig {
  enum class Generator { kSpectralPeak, kEnvelopeShape, kWaveletBurst };

  Generator generator = Generator::kSpectralPeak;
  int class_count = 6;
  int samples_per_class = 100;
  int unlabeled_samples = 1000;
  double noise_stddev = 0.3;
  std::string objective = "synthetic-classification";
};

struct PipelineConfig {
  int schema = 1;
  std::uint64_t seed = 42;
  std::size_t input_length = 256;   // L
  std::size_t code_length = 128;    // d
  std::vector<MethodSpec> methods;  // the ordered method set F
  TrainConfig compressor_train{50, 1e-3, 64, 0};
  TrainConfig mixer_train{100, 1e-3, 128, 0};
  ClassifierConfig selection;
  SynthConfig synth;

  static PipelineConfig defaults();
  static PipelineConfig from_json_text(const std::string& text);
  static PipelineConfig load(const std::string& path);
  std::string to_json_text() const;

  /// Resolves output lengths and checks every invariant (schema version,
  /// nonempty registry, uniqueness, undercompleteness, parity/power-of-two
  /// constraints of the spectral methods).
  void validate_and_finalize();

  std::size_t channel_count() const { return methods.size(); }
  std::size_t embedding_length() const { return methods.size() * code_length; }
  std::vector<std::string> method_ids() const;
};

/// Signals plus optional labels and per-sample external vectors. Signals are
/// [N x L] or [N x C x L]; multi-sequence samples are treated as batches of
/// independent sequences sharing their sample's label and external vector.
struct Dataset {
  Tensor signals;
  std::optional<std::vector<int>> labels;
  std::map<std::string, Tensor> externals;  // name -> [N x E]
  int class_count = 0;
  std::string objective;

  std::size_t sample_count() const { return signals.dim(0); }
  std::size_t sequences_per_sample() const {
    return signals.ndim() == 3 ? signals.dim(1) : 1;
  }
  std::size_t sequence_length() const { return signals.shape.back(); }
};

struct SynthResult {
  Dataset unlabeled;
  Dataset labeled;
};

/// Deterministic synthetic tasks. The class signal lives in the spectrum
/// (SpectralPeak), the amplitude envelope (EnvelopeShape) or the position of
/// a Haar-aligned burst with a class-invariant magnitude spectrum
/// (WaveletBurst). External channels receive class-informative vectors.
SynthResult synth_dataset(const PipelineConfig& config, std::uint64_t seed);

void write_dataset(const std::string& dir, const SynthResult& data,
                   const PipelineConfig& config, std::uint64_t seed);
Dataset load_dataset(const PipelineConfig& config, const std::string& dir,
                     const std::string& split);

/// A pre-trained SGSM instance: one compressor per channel plus the mixer.
struct SgsmInstance {
  PipelineConfig config;
  std::vector<CompressorModel> compressors;
  std::optional<MixerModel> mixer;
  std::vector<TrainLog> compressor_logs;
  TrainLog mixer_log;

  bool trained() const {
    return mixer.has_value() && compressors.size() == config.methods.size();
  }
};

/// Channel inputs for every sequence of the dataset: applies the transform
/// bank (or resolves external vectors) for channel `channel`.
std::vector<TransformedSequence> channel_inputs(const PipelineConfig& config,
                                                std::size_t channel,
                                                const Dataset& data);

/// Steps 1-4: transform, train the compressors separately, build the
/// concatenation dataset, train the mixer. Involves no labels.
SgsmInstance pretrain(const PipelineConfig& config, const Dataset& unlabeled);

/// Compressor training only (checkpointable midpoint for the CLI).
SgsmInstance train_compressors_only(const PipelineConfig& config,
                                    const Dataset& unlabeled);
void train_mixer_stage(SgsmInstance& instance, const Dataset& unlabeled);

void save_instance(const SgsmInstance& instance, const std::string& dir);
void save_compressors(const SgsmInstance& instance, const std::string& dir);
SgsmInstance load_instance(const PipelineConfig& config, const std::string& dir,
                           bool require_mixer = true);

/// One concatenated code per sequence, in dataset order.
std::vector<ConcatCode> concat_codes_for(const SgsmInstance& instance,
                                         const Dataset& data);

/// Step 5 embedding: [N x n*d] for single-sequence samples, [N x C x n*d]
/// otherwise. The instance is read-only here.
Tensor embed_dataset(const SgsmInstance& instance, const Dataset& data,
                     const MaskConfig& mask);

/// Full mask sweep over the annotated dataset; empty `masks` means all
/// 2^n - 1 configurations.
SelectionResult run_selection(const SgsmInstance& instance, const Dataset& data,
                              std::vector<MaskConfig> masks,
                              std::uint64_t seed);

}  // namespace sgsm
