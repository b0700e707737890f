/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace sgsm {

using Shape = std::vector<std::size_t>;

struct LayerSpec {
  enum class Kind { kLinear, kConv1d, kRelu };

  Kind kind = Kind::kRelu;
  std::size_t in = 0, out = 0;  // linear
  std::size_t in_channels = 0, out_channels = 0, kernel = 0, stride = 1;  // conv

  static LayerSpec linear(std::size_t in, std::size_t out);
  static LayerSpec conv1d(std::size_t in_channels, std::size_t out_channels,
                          std::size_t kernel, std::size_t stride);
  static LayerSpec relu();

  std::string kind_name() const;
  bool parametric() const { return kind != Kind::kRelu; }
};

/// Sequential network over float32 parameters. Layer chaining is validated
/// and all intermediate shapes are resolved at construction, so output
/// shapes are known without running data.
class Network {
 public:
  Network() = default;
  Network(Shape input_shape, std::vector<LayerSpec> specs);

  /// uniform(-a, a) with a = sqrt(1 / fan_in) for weights and biases.
  void init_params(Rng& rng);

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return shapes_.back(); }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  const std::vector<LayerSpec>& layers() const { return specs_; }
  std::size_t parameter_count() const;

  /// Flat parameter list: weight then bias for each parametric layer.
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }

  std::vector<float> forward(std::span<const float> input) const;

  /// Per-layer activations of one batch; acts[0] is the input, acts[i] the
  /// output of layer i-1. Buffers are reused across calls.
  struct Activations {
    std::size_t batch = 0;
    std::vector<std::vector<float>> acts;
  };

  void forward_batch(const float* input, std::size_t batch,
                     Activations& trace) const;

  /// Reverse pass from d(loss)/d(output). Parameter gradients are
  /// accumulated into `grads` (caller zeroes them between steps). When
  /// d_input is non-null the gradient with respect to the network input is
  /// written there ([batch * input_size]), for chaining through stacked
  /// networks.
  void backward_batch(const Activations& trace, const float* d_output,
                      std::vector<Tensor>& grads,
                      float* d_input = nullptr) const;

  static std::vector<Tensor> gradient_buffers(const Network& net);

  /// Double-precision forward with parameters supplied as one flat vector,
  /// used by finite-difference checks.
  std::vector<double> forward_f64(std::span<const double> flat_params,
                                  std::span<const double> input) const;
  std::vector<double> flat_params_f64() const;

 private:
  Shape input_shape_;
  std::vector<LayerSpec> specs_;
  std::vector<Shape> shapes_;        // shapes_[i] = output shape of layer i-1
  std::vector<std::size_t> sizes_;   // numel per entry of shapes_
  std::vector<Tensor> params_;
  std::vector<int> param_index_;     // layer -> index of its weight tensor, -1 if none
};

/// Reconstruction loss: mean squared error plus one minus the cosine
/// similarity, cos(a, b) = a.b / max(|a||b|, 1e-8).
struct LossGrad {
  double value = 0.0;
  std::vector<float> grad;
};

LossGrad mse_cosine_loss(std::span<const float> y, std::span<const float> t);
double mse_cosine_value_f64(std::span<const double> y,
                            std::span<const double> t);

/// Mean softmax cross-entropy over a batch of logits; writes
/// d(loss)/d(logits) (already divided by the batch size) into d_logits.
double softmax_cross_entropy(const float* logits, const int* labels,
                             std::size_t batch, std::size_t classes,
                             float* d_logits);

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainLog {
  std::vector<double> epoch_loss;
};

struct AdamState {
  std::vector<Tensor> m, v;
  std::int64_t step = 0;

  static AdamState like(const std::vector<Tensor>& params);
};

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

/// Max relative error between reverse-mode parameter gradients and central
/// finite differences (h = 1e-4) of the reconstruction loss, over all
/// parameters. The finite-difference path evaluates in double precision.
double gradcheck(const Network& net, std::span<const float> input,
                 std::span<const float> target);

}  // namespace sgsm
