/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "compressor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace sgsm {

CompressorModel CompressorModel::create(std::string method_id,
                                        std::size_t input_length,
                                        std::size_t code_length,
                                        std::uint64_t seed) {
  if (code_length == 0) throw ConfigError("code length must be positive");
  if (code_length >= input_length) {
    throw ConfigError("compressor for " + method_id + " must be undercomplete: d=" +
                      std::to_string(code_length) +
                      " >= L'=" + std::to_string(input_length));
  }
  if (input_length < kMinInputLength) {
    throw ConfigError("compressor input length must be >= " +
                      std::to_string(kMinInputLength));
  }

  CompressorModel m;
  m.method_id = std::move(method_id);
  m.input_length = input_length;
  m.code_length = code_length;

  const std::size_t conv1_len = (input_length - 7) / 2 + 1;
  const std::size_t conv2_len = (conv1_len - 5) / 2 + 1;
  const std::size_t flat = 32 * conv2_len;
  m.encoder = Network({1, input_length},
                      {LayerSpec::conv1d(1, 16, 7, 2), LayerSpec::relu(),
                       LayerSpec::conv1d(16, 32, 5, 2), LayerSpec::relu(),
                       LayerSpec::linear(flat, 256), LayerSpec::relu(),
                       LayerSpec::linear(256, code_length)});
  m.decoder = Network({code_length},
                      {LayerSpec::linear(code_length, 256), LayerSpec::relu(),
                       LayerSpec::linear(256, input_length)});

  Rng enc_rng(derive_seed(seed, 0x637072656e63ull));  // "cpr" encoder stream
  Rng dec_rng(derive_seed(seed, 0x637072646563ull));  // "cpr" decoder stream
  m.encoder.init_params(enc_rng);
  m.decoder.init_params(dec_rng);
  return m;
}

std::vector<float> CompressorModel::encode(const TransformedSequence& t) const {
  if (t.method_id != method_id) {
    throw InvalidArgument("sequence for method " + t.method_id +
                          " fed to the " + method_id + " compressor");
  }
  if (t.length() != input_length) {
    throw InvalidArgument("transformed sequence length mismatch for " + method_id);
  }
  std::vector<float> row(input_length);
  for (std::size_t i = 0; i < input_length; ++i) {
    row[i] = static_cast<float>(t.values[i]);
  }
  return encoder.forward(row);
}

std::vector<float> CompressorModel::encode_values(
    std::span<const float> values) const {
  if (values.size() != input_length) {
    throw InvalidArgument("transformed sequence length mismatch for " + method_id);
  }
  return encoder.forward(values);
}

std::vector<float> CompressorModel::decode(std::span<const float> code) const {
  if (code.size() != code_length) {
    throw InvalidArgument("code length mismatch for " + method_id);
  }
  return decoder.forward(code);
}

TrainLog train_compressor(CompressorModel& model,
                          const std::vector<TransformedSequence>& dataset,
                          const TrainConfig& cfg) {
  std::vector<float> rows;
  rows.reserve(dataset.size() * model.input_length);
  for (const auto& t : dataset) {
    if (t.length() != model.input_length) {
      throw InvalidArgument("training sample length mismatch for " +
                            model.method_id);
    }
    for (double v : t.values) rows.push_back(static_cast<float>(v));
  }
  return train_compressor_rows(model, rows, dataset.size(), cfg);
}

TrainLog train_compressor_rows(CompressorModel& model,
                               const std::vector<float>& rows,
                               std::size_t count, const TrainConfig& cfg) {
  cfg.validate();
  if (count == 0) throw DataError("compressor training set is empty");
  const std::size_t dim = model.input_length;
  if (rows.size() != count * dim) {
    throw InvalidArgument("packed training rows have the wrong size");
  }

  TrainLog log;
  if (cfg.epochs == 0) return log;

  Rng shuffle_rng(derive_seed(cfg.seed, 0x7368756666ull));
  auto enc_grads = Network::gradient_buffers(model.encoder);
  auto dec_grads = Network::gradient_buffers(model.decoder);
  AdamState enc_state = AdamState::like(model.encoder.parameters());
  AdamState dec_state = AdamState::like(model.decoder.parameters());

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<float> batch_in;
  std::vector<float> d_code;
  std::vector<float> d_recon;
  Network::Activations enc_trace, dec_trace;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < count; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, count - start);
      batch_in.resize(b * dim);
      for (std::size_t i = 0; i < b; ++i) {
        const float* src = rows.data() + order[start + i] * dim;
        std::copy(src, src + dim, batch_in.begin() + i * dim);
      }

      model.encoder.forward_batch(batch_in.data(), b, enc_trace);
      model.decoder.forward_batch(enc_trace.acts.back().data(), b, dec_trace);

      const auto& recon = dec_trace.acts.back();
      d_recon.resize(b * dim);
      const double scale = 1.0 / static_cast<double>(b);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const auto lg = mse_cosine_loss(
            std::span<const float>(recon.data() + i * dim, dim),
            std::span<const float>(batch_in.data() + i * dim, dim));
        batch_loss += lg.value;
        for (std::size_t k = 0; k < dim; ++k) {
          d_recon[i * dim + k] = static_cast<float>(lg.grad[k] * scale);
        }
      }
      epoch_loss += batch_loss;
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("compressor " + model.method_id +
                              " produced a non-finite loss");
      }

      for (auto& g : enc_grads) std::fill(g.values.begin(), g.values.end(), 0.0f);
      for (auto& g : dec_grads) std::fill(g.values.begin(), g.values.end(), 0.0f);

      // Chain rule through the decoder into the code, then the encoder.
      d_code.assign(b * model.code_length, 0.0f);
      model.decoder.backward_batch(dec_trace, d_recon.data(), dec_grads,
                                   d_code.data());
      model.encoder.backward_batch(enc_trace, d_code.data(), enc_grads);

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
