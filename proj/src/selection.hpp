/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mixer.hpp"
#include "tensor.hpp"

namespace sgsm {

/// Embeddings of an annotated dataset, [N x D] or [N x C x D] for samples
/// made of C independent sequences (the latter are averaged over C before
/// classification).
struct LabeledEmbeddingSet {
  Tensor embeddings;
  std::vector<int> labels;
  int class_count = 0;
  std::string objective;
};

struct SubsetReport {
  MaskConfig mask;
  double phi_train = 0.0;
  double phi_holdout = 0.0;
  std::uint64_t seed = 0;
};

struct SelectionResult {
  MaskConfig best_mask;
  double margin = 0.0;  // best holdout metric minus the runner-up's
  double gap = 0.0;     // |phi_train - phi_holdout| of the winner
  std::vector<SubsetReport> reports;
  std::uint64_t seed = 0;
  std::string objective;
};

/// All 2^n - 1 nonempty channel masks in lexicographic order of the string
/// form with 'T' sorting before 'F'. n must be in [1, 16].
std::vector<MaskConfig> enumerate_masks(std::size_t n);

struct ClassifierConfig {
  enum class Kind { kLogistic, kMlp };
  enum class Metric { kAccuracy, kMacroF1 };

  Kind kind = Kind::kLogistic;
  Metric metric = Metric::kAccuracy;
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  std::size_t mlp_hidden = 64;
  double holdout_fraction = 0.2;
};

/// Trains the fixed downstream classifier on a deterministic stratified
/// train/holdout split of z-scored embeddings and reports the metric on
/// both splits. The embeddings are expected to already reflect `mask`.
SubsetReport evaluate_subset(const LabeledEmbeddingSet& data,
                             const MaskConfig& mask, std::uint64_t seed,
                             const ClassifierConfig& cfg = {});

/// Produces the embeddings of the annotated dataset under one mask.
using EmbeddingProvider = std::function<Tensor(const MaskConfig&)>;

/// Sweeps the given masks, evaluating each with the same seed, and selects
/// the holdout-best mask. Ties break toward fewer open channels, then
/// lexicographic mask order.
SelectionResult select_best(const EmbeddingProvider& provider,
                            const std::vector<int>& labels, int class_count,
                            const std::string& objective,
                            const std::vector<MaskConfig>& masks,
                            std::uint64_t seed,
                            const ClassifierConfig& cfg = {});

std::string report_to_json(const SelectionResult& result);
SelectionResult report_from_json(const std::string& json_text);
std::string render_report_table(const SelectionResult& result);

}  // namespace sgsm
