/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "selection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace sgsm {
namespace {

// [N x C x D] -> [N x D] by averaging the C sequences of each sample.
Tensor flatten_embeddings(const Tensor& embeddings) {
  if (embeddings.ndim() == 2) return embeddings;
  if (embeddings.ndim() != 3) {
    throw InvalidArgument("embeddings must be a 2-D or 3-D tensor");
  }
  const std::size_t n = embeddings.dim(0);
  const std::size_t c = embeddings.dim(1);
  const std::size_t d = embeddings.dim(2);
  Tensor out = Tensor::zeros({n, d});
  const double inv_c = 1.0 / static_cast<double>(c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        sum += embeddings.values[(i * c + j) * d + k];
      }
      out.values[i * d + k] = static_cast<float>(sum * inv_c);
    }
  }
  return out;
}

struct Split {
  std::vector<std::size_t> train, holdout;
};

Split stratified_split(const std::vector<int>& labels, int class_count,
                       double holdout_fraction, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> per_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count) {
      throw DataError("label out of range: " + std::to_string(labels[i]));
    }
    per_class[labels[i]].push_back(i);
  }
  Split split;
  Rng rng(derive_seed(seed, 0x73706c6974ull));  // "split"
  for (int c = 0; c < class_count; ++c) {
    auto& idx = per_class[c];
    if (idx.size() < 2) {
      throw DataError("class " + std::to_string(c) +
                      " has fewer than 2 samples");
    }
    rng.shuffle(idx);
    const auto holdout_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(
               holdout_fraction * static_cast<double>(idx.size()))));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < holdout_count ? split.holdout : split.train).push_back(idx[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  return split;
}

// Feature-wise standardization fitted on the training rows.
void fit_apply_zscore(std::vector<float>& train_rows,
                      std::vector<float>& holdout_rows, std::size_t dim) {
  const std::size_t n_train = train_rows.size() / dim;
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += train_rows[i * dim + k];
  }
  for (std::size_t k = 0; k < dim; ++k) mean[k] /= static_cast<double>(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = train_rows[i * dim + k] - mean[k];
      var[k] += d * d;
    }
  }
  std::vector<double> inv_std(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double stddev = std::sqrt(var[k] / static_cast<double>(n_train));
    inv_std[k] = stddev > 1e-8 ? 1.0 / stddev : 0.0;
  }
  auto apply = [&](std::vector<float>& rows) {
    const std::size_t n = rows.size() / dim;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        rows[i * dim + k] = static_cast<float>(
            (rows[i * dim + k] - mean[k]) * inv_std[k]);
      }
    }
  };
  apply(train_rows);
  apply(holdout_rows);
}

double score_metric(const std::vector<int>& predicted,
                    const std::vector<int>& truth, int class_count,
                    ClassifierConfig::Metric metric) {
  if (metric == ClassifierConfig::Metric::kAccuracy) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (predicted[i] == truth[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
  }
  // Macro F1.
  double f1_sum = 0.0;
  for (int c = 0; c < class_count; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool pred_c = predicted[i] == c;
      const bool true_c = truth[i] == c;
      tp += pred_c && true_c;
      fp += pred_c && !true_c;
      fn += !pred_c && true_c;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  }
  return f1_sum / static_cast<double>(class_count);
}

std::vector<int> predict(const Network& net, const std::vector<float>& rows,
                         std::size_t dim, std::size_t classes) {
  const std::size_t n = rows.size() / dim;
  Network::Activations trace;
  net.forward_batch(rows.data(), n, trace);
  const auto& logits = trace.acts.back();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = logits.data() + i * classes;
    out[i] = static_cast<int>(std::max_element(row, row + classes) - row);
  }
  return out;
}

}  // namespace

std::vector<MaskConfig> enumerate_masks(std::size_t n) {
  if (n < 1 || n > 16) {
    throw InvalidArgument("mask enumeration supports 1..16 channels");
  }
  std::vector<MaskConfig> masks;
  const std::uint32_t all_closed = (1u << n) - 1u;
  masks.reserve(all_closed);
  // Reading bit (n-1-i) as 'F' makes ascending integers lexicographic with
  // 'T' ordered before 'F'.
  for (std::uint32_t v = 0; v < all_closed; ++v) {
    MaskConfig m;
    m.open.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.open[i] = ((v >> (n - 1 - i)) & 1u) == 0u;
    }
    masks.push_back(std::move(m));
  }
  return masks;
}

SubsetReport evaluate_subset(const LabeledEmbeddingSet& data,
                             const MaskConfig& mask, std::uint64_t seed,
                             const ClassifierConfig& cfg) {
  mask.validate();
  const Tensor flat = flatten_embeddings(data.embeddings);
  const std::size_t n = flat.dim(0);
  const std::size_t dim = flat.dim(1);
  if (data.labels.size() != n) {
    throw DataError("label count does not match the embedding count");
  }
  if (data.class_count < 2) throw DataError("need at least two classes");
  if (n < 2 * static_cast<std::size_t>(data.class_count)) {
    throw DataError("need at least two samples per class");
  }

  const Split split = stratified_split(data.labels, data.class_count,
                                       cfg.holdout_fraction, seed);
  auto gather = [&](const std::vector<std::size_t>& idx, std::vector<float>& rows,
                    std::vector<int>& labels) {
    rows.resize(idx.size() * dim);
    labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const float* src = flat.values.data() + idx[i] * dim;
      std::copy(src, src + dim, rows.begin() + i * dim);
      labels[i] = data.labels[idx[i]];
    }
  };
  std::vector<float> train_rows, holdout_rows;
  std::vector<int> train_labels, holdout_labels;
  gather(split.train, train_rows, train_labels);
  gather(split.holdout, holdout_rows, holdout_labels);
  fit_apply_zscore(train_rows, holdout_rows, dim);

  const auto classes = static_cast<std::size_t>(data.class_count);
  Network net =
      cfg.kind == ClassifierConfig::Kind::kLogistic
          ? Network({dim}, {LayerSpec::linear(dim, classes)})
          : Network({dim}, {LayerSpec::linear(dim, cfg.mlp_hidden),
                            LayerSpec::relu(),
                            LayerSpec::linear(cfg.mlp_hidden, classes)});
  Rng init_rng(derive_seed(seed, 0x636c66ull));  // "clf"
  net.init_params(init_rng);

  auto grads = Network::gradient_buffers(net);
  AdamState state = AdamState::like(net.parameters());
  Network::Activations trace;
  const std::size_t n_train = train_labels.size();
  std::vector<float> d_logits(n_train * classes);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    net.forward_batch(train_rows.data(), n_train, trace);
    const double loss =
        softmax_cross_entropy(trace.acts.back().data(), train_labels.data(),
                              n_train, classes, d_logits.data());
    if (!std::isfinite(loss)) {
      throw DivergenceError("downstream classifier diverged");
    }
    for (auto& g : grads) std::fill(g.values.begin(), g.values.end(), 0.0f);
    net.backward_batch(trace, d_logits.data(), grads);
    adam_step(net.parameters(), grads, state, cfg.learning_rate);
  }

  SubsetReport report;
  report.mask = mask;
  report.seed = seed;
  report.phi_train =
      score_metric(predict(net, train_rows, dim, classes), train_labels,
                   data.class_count, cfg.metric);
  report.phi_holdout =
      score_metric(predict(net, holdout_rows, dim, classes), holdout_labels,
                   data.class_count, cfg.metric);
  return report;
}

SelectionResult select_best(const EmbeddingProvider& provider,
                            const std::vector<int>& labels, int class_count,
                            const std::string& objective,
                            const std::vector<MaskConfig>& masks,
                            std::uint64_t seed, const ClassifierConfig& cfg) {
  if (masks.empty()) throw InvalidArgument("no masks to evaluate");

  SelectionResult result;
  result.seed = seed;
  result.objective = objective;
  result.reports.reserve(masks.size());
  for (const auto& mask : masks) {
    LabeledEmbeddingSet data;
    data.embeddings = provider(mask);
    data.labels = labels;
    data.class_count = class_count;
    data.objective = objective;
    result.reports.push_back(evaluate_subset(data, mask, seed, cfg));
  }

  // Holdout-best; ties prefer fewer open channels, then earlier mask string
  // ('T' < 'F'), i.e. the enumeration order.
  auto mask_less = [](const MaskConfig& a, const MaskConfig& b) {
    const std::string sa = a.to_string(), sb = b.to_string();
    for (std::size_t i = 0; i < std::min(sa.size(), sb.size()); ++i) {
      if (sa[i] != sb[i]) return sa[i] == 'T';
    }
    return sa.size() < sb.size();
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.reports.size(); ++i) {
    const auto& cand = result.reports[i];
    const auto& cur = result.reports[best];
    if (cand.phi_holdout > cur.phi_holdout ||
        (cand.phi_holdout == cur.phi_holdout &&
         (cand.mask.open_count() < cur.mask.open_count() ||
          (cand.mask.open_count() == cur.mask.open_count() &&
           mask_less(cand.mask, cur.mask))))) {
      best = i;
    }
  }
  result.best_mask = result.reports[best].mask;
  result.gap = std::abs(result.reports[best].phi_train -
                        result.reports[best].phi_holdout);
  double runner_up = -1.0;
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    if (i == best) continue;
    runner_up = std::max(runner_up, result.reports[i].phi_holdout);
  }
  result.margin =
      runner_up < 0.0 ? 0.0 : result.reports[best].phi_holdout - runner_up;
  return result;
}

std::string report_to_json(const SelectionResult& result) {
  nlohmann::json j;
  j["schema"] = 1;
  j["kind"] = "sgsm-report";
  j["objective"] = result.objective;
  j["seed"] = result.seed;
  j["best_mask"] = result.best_mask.to_string();
  j["margin"] = result.margin;
  j["gap"] = result.gap;
  j["masks"] = nlohmann::json::array();
  for (const auto& r : result.reports) {
    j["masks"].push_back({{"mask", r.mask.to_string()},
                          {"phi_train", r.phi_train},
                          {"phi_holdout", r.phi_holdout}});
  }
  return j.dump(2) + "\n";
}

SelectionResult report_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
  try {
    SelectionResult result;
    result.objective = j.at("objective").get<std::string>();
    result.seed = j.at("seed").get<std::uint64_t>();
    result.best_mask = MaskConfig::from_string(j.at("best_mask").get<std::string>());
    result.margin = j.at("margin").get<double>();
    result.gap = j.at("gap").get<double>();
    for (const auto& row : j.at("masks")) {
      SubsetReport r;
      r.mask = MaskConfig::from_string(row.at("mask").get<std::string>());
      r.phi_train = row.at("phi_train").get<double>();
      r.phi_holdout = row.at("phi_holdout").get<double>();
      r.seed = result.seed;
      result.reports.push_back(std::move(r));
    }
    return result;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report JSON missing fields: ") + e.what());
  }
}

std::string render_report_table(const SelectionResult& result) {
  std::size_t mask_width = 4;
  for (const auto& r : result.reports) {
    mask_width = std::max(mask_width, r.mask.to_string().size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(mask_width) + 2) << "mask"
      << std::right << std::setw(11) << "phi_train" << std::setw(13)
      << "phi_holdout" << "\n";
  out << std::string(mask_width + 2 + 24, '-') << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& r : result.reports) {
    out << std::left << std::setw(static_cast<int>(mask_width) + 2)
        << r.mask.to_string() << std::right << std::setw(11) << r.phi_train
        << std::setw(13) << r.phi_holdout << "\n";
  }
  out << "\nbest_mask " << result.best_mask.to_string() << "  margin "
      << result.margin << "  gap " << result.gap << "  seed " << result.seed
      << "  objective " << result.objective << "\n";
  return out.str();
}

}  // namespace sgsm
