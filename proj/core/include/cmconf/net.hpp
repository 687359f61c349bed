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

#ifndef CMCONF_NET_HPP_
#define CMCONF_NET_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cmconf/rng.hpp"

namespace cmconf::net {

// Row-major real matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Activation { kIdentity, kTanh, kSigmoid };

double sigmoid(double x);

// y = act(x W + b), W stored in x out.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }

  // Glorot-uniform weights in +-sqrt(6 / (in + out)), zero bias.
  static DenseLayer glorot(std::size_t in, std::size_t out, Activation act, Rng& rng);
  static DenseLayer zeros(std::size_t in, std::size_t out, Activation act);
  DenseLayer zeros_like() const { return zeros(in_dim(), out_dim(), activation); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Per-layer inputs and post-activation outputs of one forward pass.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> outputs;

  bool empty() const { return outputs.empty(); }
  const std::vector<double>& output() const { return outputs.back(); }
};

// Throws UsageError on shape mismatch.
ForwardCache forward(std::span<const DenseLayer> layers, std::span<const double> x);

// Back-propagates dL/d(output) through `layers`, accumulating parameter
// gradients into `grads` (same shapes as `layers`). Returns dL/d(input).
// Throws UsageError if the cache does not belong to these layers.
std::vector<double> backward(std::span<const DenseLayer> layers, const ForwardCache& cache,
                             std::span<const double> output_grad,
                             std::span<DenseLayer> grads);

// Flat views over every weight and bias, in layer order (weight, then bias).
void append_parameter_views(std::span<DenseLayer> layers, std::vector<std::span<double>>& out);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int halve_every_epochs = 10;  // <= 0 disables the schedule
};

class AdamState {
 public:
  AdamState(const AdamConfig& config, std::span<const std::span<double>> params);

  // Scheduled rate for a 0-based epoch index.
  double learning_rate(int epoch) const;

  // One bias-corrected Adam step at learning_rate(epoch).
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<double>> grads, int epoch);

  std::int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t t_ = 0;
};

// Central-difference gradient of `loss` with respect to every element of
// `params`; the parameters are perturbed in place and restored.
// Throws UsageError for step <= 0 and DataError for a non-finite loss.
std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>& loss,
                                                  std::span<const std::span<double>> params,
                                                  double step);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

}  // namespace cmconf::net

#endif  // CMCONF_NET_HPP_
