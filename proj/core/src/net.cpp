// Copyright 2026 The cmconf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cmconf/net.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "cmconf/errors.hpp"

namespace cmconf::net {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kSigmoid:
      return sigmoid(z);
    case Activation::kIdentity:
      break;
  }
  return z;
}

// Derivative expressed through the activation output y.
double activation_grad(Activation act, double y) {
  switch (act) {
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kSigmoid:
      return y * (1.0 - y);
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

}  // namespace

DenseLayer DenseLayer::glorot(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  DenseLayer layer = zeros(in, out, act);
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
  return layer;
}

DenseLayer DenseLayer::zeros(std::size_t in, std::size_t out, Activation act) {
  return DenseLayer{Matrix(in, out), std::vector<double>(out, 0.0), act};
}

ForwardCache forward(std::span<const DenseLayer> layers, std::span<const double> x) {
  ForwardCache cache;
  cache.inputs.reserve(layers.size());
  cache.outputs.reserve(layers.size());
  std::vector<double> current(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (current.size() != layer.in_dim()) {
      throw UsageError(fmt::format("forward: layer {} expects input dim {}, got {}", l,
                                   layer.in_dim(), current.size()));
    }
    std::vector<double> next(layer.bias);
    for (std::size_t i = 0; i < layer.in_dim(); ++i) {
      const double xi = current[i];
      if (xi == 0.0) continue;
      const auto w = layer.weight.row(i);
      for (std::size_t j = 0; j < next.size(); ++j) next[j] += xi * w[j];
    }
    for (double& v : next) v = activate(layer.activation, v);
    cache.inputs.push_back(std::move(current));
    current = next;
    cache.outputs.push_back(std::move(next));
  }
  return cache;
}

std::vector<double> backward(std::span<const DenseLayer> layers, const ForwardCache& cache,
                             std::span<const double> output_grad,
                             std::span<DenseLayer> grads) {
  if (cache.outputs.size() != layers.size() || cache.inputs.size() != layers.size() ||
      layers.empty()) {
    throw UsageError("backward: missing or mismatched forward cache");
  }
  if (grads.size() != layers.size()) throw UsageError("backward: gradient shape mismatch");
  if (output_grad.size() != layers.back().out_dim()) {
    throw UsageError("backward: output gradient has the wrong dimension");
  }
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    DenseLayer& grad = grads[l];
    const auto& in = cache.inputs[l];
    const auto& out = cache.outputs[l];
    if (grad.in_dim() != layer.in_dim() || grad.out_dim() != layer.out_dim()) {
      throw UsageError("backward: gradient shape mismatch");
    }
    for (std::size_t j = 0; j < delta.size(); ++j) {
      delta[j] *= activation_grad(layer.activation, out[j]);
      grad.bias[j] += delta[j];
    }
    std::vector<double> din(layer.in_dim(), 0.0);
    for (std::size_t i = 0; i < layer.in_dim(); ++i) {
      const auto w = layer.weight.row(i);
      auto gw = grad.weight.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < delta.size(); ++j) {
        gw[j] += in[i] * delta[j];
        acc += w[j] * delta[j];
      }
      din[i] = acc;
    }
    delta = std::move(din);
  }
  return delta;
}

void append_parameter_views(std::span<DenseLayer> layers, std::vector<std::span<double>>& out) {
  for (DenseLayer& layer : layers) {
    out.push_back(layer.weight.values());
    out.push_back(layer.bias);
  }
}

AdamState::AdamState(const AdamConfig& config, std::span<const std::span<double>> params)
    : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

double AdamState::learning_rate(int epoch) const {
  if (config_.halve_every_epochs <= 0) return config_.learning_rate;
  return config_.learning_rate * std::ldexp(1.0, -(epoch / config_.halve_every_epochs));
}

void AdamState::step(std::span<const std::span<double>> params,
                     std::span<const std::span<double>> grads, int epoch) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw UsageError("adam: parameter list does not match optimizer state");
  }
  ++t_;
  const double lr = learning_rate(epoch);
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (p.size() != m.size() || g.size() != m.size()) {
      throw UsageError("adam: parameter shape changed between steps");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>& loss,
                                                  std::span<const std::span<double>> params,
                                                  double step) {
  if (!(step > 0.0)) throw UsageError("finite_diff_grad: step must be positive");
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    std::vector<double> g(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + step;
      const double up = loss();
      p[i] = saved - step;
      const double down = loss();
      p[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw DataError("finite_diff_grad: loss is not finite near the parameters");
      }
      g[i] = (up - down) / (2.0 * step);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor) {
  if (a.size() != b.size()) throw UsageError("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace cmconf::net
