/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "mixer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace sgsm {

namespace mask_stats {
namespace {
std::atomic<std::uint64_t> g_global_mask_count{0};
}
void reset() { g_global_mask_count.store(0); }
std::uint64_t global_mask_applications() { return g_global_mask_count.load(); }
}  // namespace mask_stats

MaskConfig MaskConfig::from_string(const std::string& s) {
  MaskConfig m;
  m.open.reserve(s.size());
  for (char c : s) {
    if (c == 'T' || c == 't') {
      m.open.push_back(true);
    } else if (c == 'F' || c == 'f') {
      m.open.push_back(false);
    } else {
      throw InvalidArgument("mask strings use only 'T' and 'F': " + s);
    }
  }
  m.validate();
  return m;
}

MaskConfig MaskConfig::all_open(std::size_t n) {
  MaskConfig m;
  m.open.assign(n, true);
  m.validate();
  return m;
}

std::string MaskConfig::to_string() const {
  std::string s;
  s.reserve(open.size());
  for (bool b : open) s.push_back(b ? 'T' : 'F');
  return s;
}

std::size_t MaskConfig::open_count() const {
  return static_cast<std::size_t>(std::count(open.begin(), open.end(), true));
}

void MaskConfig::validate() const {
  if (open.empty()) throw InvalidArgument("mask has no channels");
  if (open_count() == 0) {
    throw InvalidArgument("masking all channels is not allowed: " + to_string());
  }
}

ConcatCode concat_codes(const std::vector<std::vector<float>>& codes) {
  if (codes.empty()) throw InvalidArgument("no codes to concatenate");
  const std::size_t d = codes.front().size();
  if (d == 0) throw InvalidArgument("codes must be nonempty");
  ConcatCode v;
  v.channel_count = codes.size();
  v.code_length = d;
  v.values.reserve(codes.size() * d);
  for (const auto& code : codes) {
    if (code.size() != d) {
      throw InvalidArgument("codes must share one length to concatenate");
    }
    v.values.insert(v.values.end(), code.begin(), code.end());
  }
  return v;
}

std::vector<float> apply_global_mask(const ConcatCode& v, Rng& rng) {
  mask_stats::g_global_mask_count.fetch_add(1, std::memory_order_relaxed);
  std::vector<float> out = v.values;
  const std::size_t n = out.size();
  const auto zero_count = static_cast<std::size_t>(
      std::llround(kGlobalMaskFraction * static_cast<double>(n)));
  // Partial Fisher-Yates: the first zero_count slots end up holding a
  // uniform sample of positions without replacement.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < zero_count; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(idx[i], idx[j]);
    out[idx[i]] = 0.0f;
  }
  return out;
}

std::vector<float> apply_channel_mask(const ConcatCode& v,
                                      const MaskConfig& mask) {
  mask.validate();
  if (mask.channel_count() != v.channel_count) {
    throw InvalidArgument("mask has " + std::to_string(mask.channel_count()) +
                          " channels but the code has " +
                          std::to_string(v.channel_count));
  }
  std::vector<float> out = v.values;
  for (std::size_t c = 0; c < v.channel_count; ++c) {
    if (!mask.open[c]) {
      std::fill(out.begin() + c * v.code_length,
                out.begin() + (c + 1) * v.code_length, 0.0f);
    }
  }
  return out;
}

MaskDraw sample_training_mask(const ConcatCode& v, Rng& rng) {
  MaskDraw draw;
  if (rng.uniform() < kGlobalPolicyProbability) {
    draw.policy = MaskPolicy::kGlobal;
    draw.masked = apply_global_mask(v, rng);
    return draw;
  }
  draw.policy = MaskPolicy::kChannel;
  MaskConfig mask;
  mask.open.resize(v.channel_count);
  while (true) {
    bool any_open = false;
    for (std::size_t c = 0; c < v.channel_count; ++c) {
      const bool closed = rng.bernoulli(kChannelCloseProbability);
      mask.open[c] = !closed;
      any_open = any_open || !closed;
    }
    if (any_open) break;  // the all-closed draw is rejected and redrawn
  }
  draw.channels = mask;
  draw.masked = apply_channel_mask(v, mask);
  return draw;
}

MixerModel MixerModel::create(std::size_t channel_count,
                              std::size_t code_length, std::uint64_t seed) {
  if (channel_count == 0 || code_length == 0) {
    throw ConfigError("mixer needs at least one channel and a positive code length");
  }
  MixerModel m;
  m.channel_count = channel_count;
  m.code_length = code_length;
  const std::size_t nd = channel_count * code_length;
  const std::size_t hidden = 4 * nd;
  m.encoder = Network({nd}, {LayerSpec::linear(nd, hidden), LayerSpec::relu(),
                             LayerSpec::linear(hidden, nd)});
  m.decoder = Network({nd}, {LayerSpec::linear(nd, hidden), LayerSpec::relu(),
                             LayerSpec::linear(hidden, nd)});
  Rng enc_rng(derive_seed(seed, 0x6d78656e63ull));  // "mx" encoder stream
  Rng dec_rng(derive_seed(seed, 0x6d78646563ull));  // "mx" decoder stream
  m.encoder.init_params(enc_rng);
  m.decoder.init_params(dec_rng);
  return m;
}

std::vector<float> MixerModel::embed(const ConcatCode& v,
                                     const MaskConfig& mask) const {
  if (v.channel_count != channel_count || v.code_length != code_length) {
    throw InvalidArgument("concatenated code does not match the mixer shape");
  }
  return encoder.forward(apply_channel_mask(v, mask));
}

TrainLog train_mixer(MixerModel& model, const std::vector<ConcatCode>& dataset,
                     const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw DataError("mixer training set is empty");
  const std::size_t nd = model.embedding_length();
  for (const auto& v : dataset) {
    if (v.channel_count != model.channel_count ||
        v.code_length != model.code_length) {
      throw InvalidArgument("mixer training sample has the wrong shape");
    }
  }

  TrainLog log;
  if (cfg.epochs == 0) return log;

  Rng shuffle_rng(derive_seed(cfg.seed, 0x7368756666ull));
  Rng mask_rng(derive_seed(cfg.seed, 0x6d61736bull));
  auto enc_grads = Network::gradient_buffers(model.encoder);
  auto dec_grads = Network::gradient_buffers(model.decoder);
  AdamState enc_state = AdamState::like(model.encoder.parameters());
  AdamState dec_state = AdamState::like(model.decoder.parameters());

  const std::size_t count = dataset.size();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> masked_in, targets, d_recon, d_embed;
  Network::Activations enc_trace, dec_trace;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < count; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, count - start);
      masked_in.resize(b * nd);
      targets.resize(b * nd);
      for (std::size_t i = 0; i < b; ++i) {
        const ConcatCode& v = dataset[order[start + i]];
        // Fresh corruption for every presentation of the sample.
        const MaskDraw draw = sample_training_mask(v, mask_rng);
        std::copy(draw.masked.begin(), draw.masked.end(),
                  masked_in.begin() + i * nd);
        std::copy(v.values.begin(), v.values.end(), targets.begin() + i * nd);
      }

      model.encoder.forward_batch(masked_in.data(), b, enc_trace);
      model.decoder.forward_batch(enc_trace.acts.back().data(), b, dec_trace);

      const auto& recon = dec_trace.acts.back();
      d_recon.resize(b * nd);
      const double scale = 1.0 / static_cast<double>(b);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const auto lg = mse_cosine_loss(
            std::span<const float>(recon.data() + i * nd, nd),
            std::span<const float>(targets.data() + i * nd, nd));
        batch_loss += lg.value;
        for (std::size_t k = 0; k < nd; ++k) {
          d_recon[i * nd + k] = static_cast<float>(lg.grad[k] * scale);
        }
      }
      epoch_loss += batch_loss;
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("mixer produced a non-finite loss");
      }

      for (auto& g : enc_grads) std::fill(g.values.begin(), g.values.end(), 0.0f);
      for (auto& g : dec_grads) std::fill(g.values.begin(), g.values.end(), 0.0f);
      d_embed.assign(b * nd, 0.0f);
      model.decoder.backward_batch(dec_trace, d_recon.data(), dec_grads,
                                   d_embed.data());
      model.encoder.backward_batch(enc_trace, d_embed.data(), enc_grads);

      adam_step(model.decoder.parameters(), dec_grads, dec_state,
                cfg.learning_rate);
      adam_step(model.encoder.parameters(), enc_grads, enc_state,
                cfg.learning_rate);
    }
    log.epoch_loss.push_back(epoch_loss / static_cast<double>(count));
  }
  return log;
}

}  // namespace sgsm
