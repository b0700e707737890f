/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The sgsm Authors
 */
#include "neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "errors.hpp"

namespace sgsm {
namespace {

// Fixed-order dot product with independent partial sums. The summation
// order is identical for every batch size, which keeps single-sample and
// batched forwards bitwise equal.
template <typename S>
inline S dot_span(const S* a, const S* b, std::size_t n) {
  constexpr std::size_t kWidth = 16;
  S acc[kWidth] = {};
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    for (std::size_t j = 0; j < kWidth; ++j) acc[j] += a[i + j] * b[i + j];
  }
  S tail = S(0);
  for (; i < n; ++i) tail += a[i] * b[i];
  S total = tail;
  for (std::size_t j = 0; j < kWidth; ++j) total += acc[j];
  return total;
}

template <typename S>
inline void axpy(S coef, const S* x, S* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += coef * x[i];
}

template <typename S>
void linear_forward(const S* x, const S* w, const S* bias, S* y,
                    std::size_t batch, std::size_t in, std::size_t out) {
  for (std::size_t o = 0; o < out; ++o) {
    const S* wrow = w + o * in;
    for (std::size_t b = 0; b < batch; ++b) {
      y[b * out + o] = bias[o] + dot_span(x + b * in, wrow, in);
    }
  }
}

void linear_backward(const float* x, const float* w, const float* dy,
                     float* dx, float* dw, float* db, std::size_t batch,
                     std::size_t in, std::size_t out) {
  if (dx) {
    std::memset(dx, 0, batch * in * sizeof(float));
    for (std::size_t o = 0; o < out; ++o) {
      const float* wrow = w + o * in;
      for (std::size_t b = 0; b < batch; ++b) {
        axpy(dy[b * out + o], wrow, dx + b * in, in);
      }
    }
  }
  for (std::size_t o = 0; o < out; ++o) {
    float* dwrow = dw + o * in;
    double bias_sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const float g = dy[b * out + o];
      axpy(g, x + b * in, dwrow, in);
      bias_sum += g;
    }
    db[o] += static_cast<float>(bias_sum);
  }
}

template <typename S>
void conv1d_forward(const S* x, const S* w, const S* bias, S* y,
                    std::size_t batch, std::size_t in_ch, std::size_t len,
                    std::size_t out_ch, std::size_t kernel, std::size_t stride,
                    std::size_t out_len) {
  for (std::size_t b = 0; b < batch; ++b) {
    const S* xb = x + b * in_ch * len;
    S* yb = y + b * out_ch * out_len;
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      const S* wo = w + oc * in_ch * kernel;
      S* yo = yb + oc * out_len;
      for (std::size_t t = 0; t < out_len; ++t) {
        S acc = bias[oc];
        const std::size_t base = t * stride;
        for (std::size_t ic = 0; ic < in_ch; ++ic) {
          const S* xi = xb + ic * len + base;
          const S* wi = wo + ic * kernel;
          for (std::size_t j = 0; j < kernel; ++j) acc += xi[j] * wi[j];
        }
        yo[t] = acc;
      }
    }
  }
}

void conv1d_backward(const float* x, const float* w, const float* dy,
                     float* dx, float* dw, float* db, std::size_t batch,
                     std::size_t in_ch, std::size_t len, std::size_t out_ch,
                     std::size_t kernel, std::size_t stride,
                     std::size_t out_len) {
  if (dx) std::memset(dx, 0, batch * in_ch * len * sizeof(float));
  for (std::size_t b = 0; b < batch; ++b) {
    const float* xb = x + b * in_ch * len;
    const float* dyb = dy + b * out_ch * out_len;
    float* dxb = dx ? dx + b * in_ch * len : nullptr;
    for (std::size_t oc = 0; oc < out_ch; ++oc) {
      const float* wo = w + oc * in_ch * kernel;
      float* dwo = dw + oc * in_ch * kernel;
      const float* dyo = dyb + oc * out_len;
      double bias_sum = 0.0;
      for (std::size_t t = 0; t < out_len; ++t) {
        const float g = dyo[t];
        bias_sum += g;
        const std::size_t base = t * stride;
        for (std::size_t ic = 0; ic < in_ch; ++ic) {
          const float* xi = xb + ic * len + base;
          float* dwi = dwo + ic * kernel;
          for (std::size_t j = 0; j < kernel; ++j) dwi[j] += g * xi[j];
          if (dxb) {
            float* dxi = dxb + ic * len + base;
            const float* wi = wo + ic * kernel;
            for (std::size_t j = 0; j < kernel; ++j) dxi[j] += g * wi[j];
          }
        }
      }
      db[oc] += static_cast<float>(bias_sum);
    }
  }
}

template <typename S>
void relu_forward(const S* x, S* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > S(0) ? x[i] : S(0);
}

}  // namespace

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = Kind::kLinear;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::conv1d(std::size_t in_channels, std::size_t out_channels,
                            std::size_t kernel, std::size_t stride) {
  LayerSpec s;
  s.kind = Kind::kConv1d;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = Kind::kRelu;
  return s;
}

std::string LayerSpec::kind_name() const {
  switch (kind) {
    case Kind::kLinear: return "linear";
    case Kind::kConv1d: return "conv1d";
    case Kind::kRelu: return "relu";
  }
  throw InvalidArgument("unknown layer kind");
}

Network::Network(Shape input_shape, std::vector<LayerSpec> specs)
    : input_shape_(std::move(input_shape)), specs_(std::move(specs)) {
  auto numel = [](const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return s.empty() ? 0 : n;
  };
  if (input_shape_.empty() || numel(input_shape_) == 0) {
    throw InvalidArgument("network input shape must be nonempty");
  }

  Shape cur = input_shape_;
  shapes_.push_back(cur);
  sizes_.push_back(numel(cur));
  for (const auto& spec : specs_) {
    switch (spec.kind) {
      case LayerSpec::Kind::kLinear: {
        if (spec.in == 0 || spec.out == 0 || numel(cur) != spec.in) {
          throw InvalidArgument("linear layer shape mismatch: expected " +
                                std::to_string(spec.in) + " inputs, got " +
                                std::to_string(numel(cur)));
        }
        cur = {spec.out};
        param_index_.push_back(static_cast<int>(params_.size()));
        params_.push_back(Tensor::zeros({spec.out, spec.in}));
        params_.push_back(Tensor::zeros({spec.out}));
        break;
      }
      case LayerSpec::Kind::kConv1d: {
        Shape as_2d = cur;
        if (as_2d.size() == 1) as_2d = {1, as_2d[0]};
        if (as_2d.size() != 2 || as_2d[0] != spec.in_channels) {
          throw InvalidArgument("conv1d layer channel mismatch");
        }
        if (spec.kernel == 0 || spec.stride == 0 || as_2d[1] < spec.kernel) {
          throw InvalidArgument("conv1d kernel does not fit the input length");
        }
        const std::size_t out_len = (as_2d[1] - spec.kernel) / spec.stride + 1;
        cur = {spec.out_channels, out_len};
        param_index_.push_back(static_cast<int>(params_.size()));
        params_.push_back(
            Tensor::zeros({spec.out_channels, spec.in_channels, spec.kernel}));
        params_.push_back(Tensor::zeros({spec.out_channels}));
        break;
      }
      case LayerSpec::Kind::kRelu:
        param_index_.push_back(-1);
        break;
    }
    shapes_.push_back(cur);
    sizes_.push_back(numel(cur));
  }
}

void Network::init_params(Rng& rng) {
  for (std::size_t layer = 0; layer < specs_.size(); ++layer) {
    const int pi = param_index_[layer];
    if (pi < 0) continue;
    const auto& spec = specs_[layer];
    const std::size_t fan_in = spec.kind == LayerSpec::Kind::kLinear
                                   ? spec.in
                                   : spec.in_channels * spec.kernel;
    const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
    for (auto& v : params_[pi].values) v = static_cast<float>(rng.uniform(-a, a));
    for (auto& v : params_[pi + 1].values) {
      v = static_cast<float>(rng.uniform(-a, a));
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

std::vector<float> Network::forward(std::span<const float> input) const {
  if (input.size() != input_size()) {
    throw InvalidArgument("forward input size mismatch");
  }
  Activations trace;
  forward_batch(input.data(), 1, trace);
  return trace.acts.back();
}

void Network::forward_batch(const float* input, std::size_t batch,
                            Activations& trace) const {
  trace.batch = batch;
  trace.acts.resize(specs_.size() + 1);
  trace.acts[0].assign(input, input + batch * sizes_[0]);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& spec = specs_[i];
    trace.acts[i + 1].resize(batch * sizes_[i + 1]);
    const float* x = trace.acts[i].data();
    float* y = trace.acts[i + 1].data();
    switch (spec.kind) {
      case LayerSpec::Kind::kLinear: {
        const int pi = param_index_[i];
        linear_forward(x, params_[pi].data(), params_[pi + 1].data(), y, batch,
                       spec.in, spec.out);
        break;
      }
      case LayerSpec::Kind::kConv1d: {
        const int pi = param_index_[i];
        const std::size_t len = shapes_[i].back();
        const std::size_t out_len = shapes_[i + 1].back();
        conv1d_forward(x, params_[pi].data(), params_[pi + 1].data(), y, batch,
                       spec.in_channels, len, spec.out_channels, spec.kernel,
                       spec.stride, out_len);
        break;
      }
      case LayerSpec::Kind::kRelu:
        relu_forward(x, y, batch * sizes_[i]);
        break;
    }
  }
}

void Network::backward_batch(const Activations& trace, const float* d_output,
                             std::vector<Tensor>& grads,
                             float* d_input) const {
  const std::size_t batch = trace.batch;
  std::vector<float> d_cur(d_output, d_output + batch * sizes_.back());
  std::vector<float> d_prev;
  for (std::size_t idx = specs_.size(); idx > 0; --idx) {
    const std::size_t i = idx - 1;
    const auto& spec = specs_[i];
    const float* x = trace.acts[i].data();
    const bool need_dx = i > 0 || d_input != nullptr;
    d_prev.assign(batch * sizes_[i], 0.0f);
    switch (spec.kind) {
      case LayerSpec::Kind::kLinear: {
        const int pi = param_index_[i];
        linear_backward(x, params_[pi].data(), d_cur.data(),
                        need_dx ? d_prev.data() : nullptr,
                        grads[pi].data(), grads[pi + 1].data(), batch, spec.in,
                        spec.out);
        break;
      }
      case LayerSpec::Kind::kConv1d: {
        const int pi = param_index_[i];
        const std::size_t len = shapes_[i].back();
        const std::size_t out_len = shapes_[i + 1].back();
        conv1d_backward(x, params_[pi].data(), d_cur.data(),
                        need_dx ? d_prev.data() : nullptr, grads[pi].data(),
                        grads[pi + 1].data(), batch, spec.in_channels, len,
                        spec.out_channels, spec.kernel, spec.stride, out_len);
        break;
      }
      case LayerSpec::Kind::kRelu: {
        const float* y = trace.acts[i + 1].data();
        const std::size_t n = batch * sizes_[i];
        for (std::size_t k = 0; k < n; ++k) {
          d_prev[k] = y[k] > 0.0f ? d_cur[k] : 0.0f;
        }
        break;
      }
    }
    d_cur.swap(d_prev);
  }
  if (d_input != nullptr) {
    std::copy(d_cur.begin(), d_cur.end(), d_input);
  }
}

std::vector<Tensor> Network::gradient_buffers(const Network& net) {
  std::vector<Tensor> grads;
  grads.reserve(net.params_.size());
  for (const auto& p : net.params_) grads.push_back(Tensor::zeros(p.shape));
  return grads;
}

std::vector<double> Network::flat_params_f64() const {
  std::vector<double> flat;
  for (const auto& p : params_) {
    for (float v : p.values) flat.push_back(static_cast<double>(v));
  }
  return flat;
}

std::vector<double> Network::forward_f64(std::span<const double> flat_params,
                                         std::span<const double> input) const {
  if (input.size() != input_size()) {
    throw InvalidArgument("forward input size mismatch");
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  // Offsets of each parameter tensor inside the flat vector.
  std::vector<std::size_t> offsets(params_.size() + 1, 0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    offsets[i + 1] = offsets[i] + params_[i].values.size();
  }
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& spec = specs_[i];
    next.assign(sizes_[i + 1], 0.0);
    switch (spec.kind) {
      case LayerSpec::Kind::kLinear: {
        const int pi = param_index_[i];
        linear_forward(cur.data(), flat_params.data() + offsets[pi],
                       flat_params.data() + offsets[pi + 1], next.data(), 1,
                       spec.in, spec.out);
        break;
      }
      case LayerSpec::Kind::kConv1d: {
        const int pi = param_index_[i];
        conv1d_forward(cur.data(), flat_params.data() + offsets[pi],
                       flat_params.data() + offsets[pi + 1], next.data(), 1,
                       spec.in_channels, shapes_[i].back(), spec.out_channels,
                       spec.kernel, spec.stride, shapes_[i + 1].back());
        break;
      }
      case LayerSpec::Kind::kRelu:
        relu_forward(cur.data(), next.data(), sizes_[i]);
        break;
    }
    cur.swap(next);
  }
  return cur;
}

LossGrad mse_cosine_loss(std::span<const float> y, std::span<const float> t) {
  if (y.size() != t.size() || y.empty()) {
    throw InvalidArgument("loss operands must share a nonempty shape");
  }
  const std::size_t n = y.size();
  double sq = 0.0, dot = 0.0, ny = 0.0, nt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double yd = y[i], td = t[i];
    const double diff = yd - td;
    sq += diff * diff;
    dot += yd * td;
    ny += yd * yd;
    nt += td * td;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double norm_y = std::sqrt(ny);
  const double norm_t = std::sqrt(nt);
  const double raw_denom = norm_y * norm_t;
  const double denom = std::max(raw_denom, 1e-8);
  const double cosine = dot / denom;

  LossGrad out;
  out.value = sq * inv_n + 1.0 - cosine;
  out.grad.resize(n);
  const bool clamped = raw_denom <= 1e-8;
  const double inv_ny2 = clamped ? 0.0 : 1.0 / ny;
  for (std::size_t i = 0; i < n; ++i) {
    const double g_mse = 2.0 * (static_cast<double>(y[i]) - t[i]) * inv_n;
    double g_cos = t[i] / denom;
    if (!clamped) g_cos -= cosine * y[i] * inv_ny2;
    out.grad[i] = static_cast<float>(g_mse - g_cos);
  }
  return out;
}

double mse_cosine_value_f64(std::span<const double> y,
                            std::span<const double> t) {
  if (y.size() != t.size() || y.empty()) {
    throw InvalidArgument("loss operands must share a nonempty shape");
  }
  double sq = 0.0, dot = 0.0, ny = 0.0, nt = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double diff = y[i] - t[i];
    sq += diff * diff;
    dot += y[i] * t[i];
    ny += y[i] * y[i];
    nt += t[i] * t[i];
  }
  const double denom = std::max(std::sqrt(ny) * std::sqrt(nt), 1e-8);
  return sq / static_cast<double>(y.size()) + 1.0 - dot / denom;
}

double softmax_cross_entropy(const float* logits, const int* labels,
                             std::size_t batch, std::size_t classes,
                             float* d_logits) {
  double total = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const float* row = logits + b * classes;
    float* drow = d_logits + b * classes;
    double max_logit = row[0];
    for (std::size_t c = 1; c < classes; ++c) {
      max_logit = std::max<double>(max_logit, row[c]);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - max_logit);
    const int label = labels[b];
    total -= (row[label] - max_logit) - std::log(z);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(row[c] - max_logit) / z;
      drow[c] = static_cast<float>(
          (p - (static_cast<int>(c) == label ? 1.0 : 0.0)) * inv_b);
    }
  }
  return total * inv_b;
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0 || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive");
}

AdamState AdamState::like(const std::vector<Tensor>& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& p : params) {
    s.m.push_back(Tensor::zeros(p.shape));
    s.v.push_back(Tensor::zeros(p.shape));
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw InvalidArgument("adam state does not match the parameter list");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& w = params[p].values;
    const auto& g = grads[p].values;
    auto& m = state.m[p].values;
    auto& v = state.v[p].values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = beta1 * m[i] + (1.0 - beta1) * gi;
      const double vi = beta2 * v[i] + (1.0 - beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      w[i] = static_cast<float>(w[i] - lr * m_hat / (std::sqrt(v_hat) + eps));
    }
  }
}

double gradcheck(const Network& net, std::span<const float> input,
                 std::span<const float> target) {
  if (net.parameter_count() >= 10000) {
    throw InvalidArgument("gradcheck is limited to networks under 10^4 parameters");
  }
  if (target.size() != net.output_size()) {
    throw InvalidArgument("gradcheck target size mismatch");
  }

  Network::Activations trace;
  net.forward_batch(input.data(), 1, trace);
  const auto loss = mse_cosine_loss(trace.acts.back(), target);
  auto grads = Network::gradient_buffers(net);
  net.backward_batch(trace, loss.grad.data(), grads);

  std::vector<double> flat = net.flat_params_f64();
  const std::vector<double> input_f64(input.begin(), input.end());
  const std::vector<double> target_f64(target.begin(), target.end());
  const double h = 1e-4;

  auto eval = [&](const std::vector<double>& params) {
    const auto y = net.forward_f64(params, input_f64);
    return mse_cosine_value_f64(y, target_f64);
  };

  double max_rel = 0.0;
  std::size_t flat_idx = 0;
  for (const auto& g : grads) {
    for (float analytic : g.values) {
      const double saved = flat[flat_idx];
      flat[flat_idx] = saved + h;
      const double up = eval(flat);
      flat[flat_idx] = saved - h;
      const double down = eval(flat);
      flat[flat_idx] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = static_cast<double>(analytic);
      const double rel =
          std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      max_rel = std::max(max_rel, rel);
      ++flat_idx;
    }
  }
  return max_rel;
}

}  // namespace sgsm
