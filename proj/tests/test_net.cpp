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

#include <gtest/gtest.h>

#include <cmath>

#include "cmconf/errors.hpp"
#include "cmconf/net.hpp"
#include "cmconf/rng.hpp"
#include "test_util.hpp"

namespace cmconf::net {
namespace {

double act(Activation a, double z) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kSigmoid:
      return 1.0 / (1.0 + std::exp(-z));
    default:
      return z;
  }
}

// Straight-line evaluation, independent of forward().
std::vector<double> reference_eval(const std::vector<DenseLayer>& layers, std::vector<double> x) {
  for (const auto& layer : layers) {
    std::vector<double> y(layer.out_dim());
    for (std::size_t j = 0; j < layer.out_dim(); ++j) {
      double z = layer.bias[j];
      for (std::size_t i = 0; i < layer.in_dim(); ++i) z += layer.weight(i, j) * x[i];
      y[j] = act(layer.activation, z);
    }
    x = std::move(y);
  }
  return x;
}

std::vector<DenseLayer> random_net(Rng& rng, std::vector<std::size_t> dims,
                                   std::vector<Activation> acts) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    auto layer = DenseLayer::glorot(dims[l], dims[l + 1], acts[l], rng);
    for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
    layers.push_back(std::move(layer));
  }
  return layers;
}

std::vector<std::span<double>> views(std::vector<DenseLayer>& layers) {
  std::vector<std::span<double>> out;
  append_parameter_views(layers, out);
  return out;
}

TEST(Forward, IdentityNetwork) {
  auto layer = DenseLayer::zeros(3, 3, Activation::kIdentity);
  for (std::size_t i = 0; i < 3; ++i) layer.weight(i, i) = 1.0;
  std::vector<DenseLayer> layers = {layer};
  const std::vector<double> x = {0.3, -1.2, 4.0};
  EXPECT_EQ(forward(layers, x).output(), x);
}

TEST(Forward, ZeroWeightsReturnBias) {
  auto layer = DenseLayer::zeros(4, 2, Activation::kIdentity);
  layer.bias = {1.5, -0.25};
  std::vector<DenseLayer> layers = {layer};
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_EQ(forward(layers, x).output(), layer.bias);
}

TEST(Forward, TwoLayerTanhMatchesStraightLine) {
  Rng rng(0);
  auto layers = random_net(rng, {2, 5, 3}, {Activation::kTanh, Activation::kTanh});
  const std::vector<double> x = {1.0, 0.0};
  const auto got = forward(layers, x).output();
  const auto want = reference_eval(layers, x);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
}

TEST(Forward, ShapeMismatchThrows) {
  Rng rng(0);
  auto layers = random_net(rng, {3, 2}, {Activation::kIdentity});
  const std::vector<double> x = {1.0, 2.0};
  EXPECT_THROW(forward(layers, x), UsageError);
}

TEST(Init, GlorotBounds) {
  Rng rng(4);
  const auto layer = DenseLayer::glorot(60, 64, Activation::kTanh, rng);
  const double bound = std::sqrt(6.0 / 124.0);
  double lo = 1, hi = -1;
  for (double w : layer.weight.values()) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  EXPECT_GE(lo, -bound);
  EXPECT_LE(hi, bound);
  EXPECT_LT(lo, -0.9 * bound);
  EXPECT_GT(hi, 0.9 * bound);
  for (double b : layer.bias) EXPECT_EQ(b, 0.0);
}

TEST(Backward, LinearLayerByHand) {
  auto layer = DenseLayer::zeros(3, 1, Activation::kIdentity);
  layer.weight(0, 0) = 0.2;
  layer.weight(1, 0) = -0.7;
  layer.weight(2, 0) = 1.1;
  std::vector<DenseLayer> layers = {layer};
  std::vector<DenseLayer> grads = {layer.zeros_like()};
  const std::vector<double> x = {2.0, -3.0, 0.5};
  const auto cache = forward(layers, x);
  const std::vector<double> one = {1.0};
  const auto dx = backward(layers, cache, one, grads);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(grads[0].weight(i, 0), x[i]);
    EXPECT_DOUBLE_EQ(dx[i], layer.weight(i, 0));
  }
  EXPECT_DOUBLE_EQ(grads[0].bias[0], 1.0);
}

TEST(Backward, ZeroOutputGradientGivesZeroGradients) {
  Rng rng(2);
  auto layers = random_net(rng, {4, 6, 3}, {Activation::kTanh, Activation::kSigmoid});
  std::vector<DenseLayer> grads;
  for (const auto& l : layers) grads.push_back(l.zeros_like());
  const auto x = testing::random_vector(rng, 4);
  const auto cache = forward(layers, x);
  const std::vector<double> zero(3, 0.0);
  const auto dx = backward(layers, cache, zero, grads);
  for (auto& g : grads) {
    for (double v : g.weight.values()) EXPECT_EQ(v, 0.0);
    for (double v : g.bias) EXPECT_EQ(v, 0.0);
  }
  for (double v : dx) EXPECT_EQ(v, 0.0);
}

TEST(Backward, MissingCacheThrows) {
  Rng rng(2);
  auto layers = random_net(rng, {4, 3}, {Activation::kTanh});
  std::vector<DenseLayer> grads = {layers[0].zeros_like()};
  const std::vector<double> g(3, 1.0);
  EXPECT_THROW(backward(layers, ForwardCache{}, g, grads), UsageError);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNets) {
  const std::vector<Activation> kinds = {Activation::kIdentity, Activation::kTanh,
                                         Activation::kSigmoid};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t in = 2 + rng.below(4), hid = 2 + rng.below(5), out = 1 + rng.below(3);
    auto layers =
        random_net(rng, {in, hid, out}, {kinds[rng.below(3)], kinds[rng.below(3)]});
    const auto x = testing::random_vector(rng, in);
    const auto coef = testing::random_vector(rng, out);
    auto loss = [&] {
      const auto y = forward(layers, x).output();
      double l = 0.0;
      for (std::size_t j = 0; j < out; ++j) l += coef[j] * y[j] + 0.5 * y[j] * y[j];
      return l;
    };
    std::vector<DenseLayer> grads;
    for (const auto& l : layers) grads.push_back(l.zeros_like());
    const auto cache = forward(layers, x);
    std::vector<double> g(out);
    for (std::size_t j = 0; j < out; ++j) g[j] = coef[j] + cache.output()[j];
    backward(layers, cache, g, grads);

    auto params = views(layers);
    const auto numeric = finite_diff_grad(loss, params, 1e-5);
    auto analytic = views(grads);
    for (std::size_t p = 0; p < params.size(); ++p) {
      EXPECT_LE(max_relative_error(analytic[p], numeric[p]), 1e-4) << "seed " << seed;
    }
  }
}

TEST(FiniteDiff, QuadraticGradientIsParameter) {
  std::vector<double> p = {0.3, -1.5, 2.0, 0.0};
  std::vector<std::span<double>> params = {std::span<double>(p)};
  auto loss = [&] {
    double s = 0.0;
    for (double v : p) s += 0.5 * v * v;
    return s;
  };
  const auto g = finite_diff_grad(loss, params, 1e-4);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(g[0][i], p[i], 1e-8);
  EXPECT_EQ(p[1], -1.5);
}

TEST(FiniteDiff, ZeroStepThrows) {
  std::vector<double> p = {1.0};
  std::vector<std::span<double>> params = {std::span<double>(p)};
  EXPECT_THROW(finite_diff_grad([&] { return p[0]; }, params, 0.0), UsageError);
}

TEST(FiniteDiff, NonFiniteLossThrows) {
  std::vector<double> p = {0.0};
  std::vector<std::span<double>> params = {std::span<double>(p)};
  EXPECT_THROW(finite_diff_grad([&] { return std::log(p[0]); }, params, 1e-3), DataError);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  std::vector<double> p = {0.5, -0.25, 3.0};
  std::vector<double> g(3, 0.0);
  std::vector<std::span<double>> params = {std::span<double>(p)};
  std::vector<std::span<double>> grads = {std::span<double>(g)};
  AdamState adam(AdamConfig{}, params);
  const auto before = p;
  for (int i = 0; i < 5; ++i) adam.step(params, grads, 0);
  EXPECT_EQ(p, before);
  EXPECT_EQ(adam.step_count(), 5);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  std::vector<double> p = {0.0, 1.0, -2.0, 0.5};
  std::vector<double> g = {0.3, -4.0, 1e-3, -0.02};
  std::vector<std::span<double>> params = {std::span<double>(p)};
  std::vector<std::span<double>> grads = {std::span<double>(g)};
  AdamState adam(AdamConfig{}, params);
  const auto before = p;
  adam.step(params, grads, 0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = -3e-4 * (g[i] > 0 ? 1.0 : -1.0);
    EXPECT_NEAR(p[i] - before[i], expected, 3e-4 * 1e-4);
  }
}

TEST(Adam, LearningRateHalvesEveryTenEpochs) {
  std::vector<double> p = {0.0};
  std::vector<std::span<double>> params = {std::span<double>(p)};
  AdamState adam(AdamConfig{}, params);
  EXPECT_DOUBLE_EQ(adam.learning_rate(0), 3e-4);
  EXPECT_DOUBLE_EQ(adam.learning_rate(9), 3e-4);
  EXPECT_DOUBLE_EQ(adam.learning_rate(10), 1.5e-4);
  EXPECT_DOUBLE_EQ(adam.learning_rate(20), 7.5e-5);
}

TEST(Adam, NeverProducesNan) {
  Rng rng(12);
  std::vector<double> p = testing::random_vector(rng, 50, -10, 10);
  std::vector<double> g(50);
  std::vector<std::span<double>> params = {std::span<double>(p)};
  std::vector<std::span<double>> grads = {std::span<double>(g)};
  AdamState adam(AdamConfig{}, params);
  for (int step = 0; step < 200; ++step) {
    for (auto& v : g) {
      const double mag = std::pow(10.0, rng.uniform(-150, 150));
      v = (rng.uniform() < 0.1) ? 0.0 : (rng.uniform() < 0.5 ? -mag : mag);
    }
    adam.step(params, grads, step / 10);
    for (double v : p) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Adam, MismatchedShapesThrow) {
  std::vector<double> p = {0.0, 1.0};
  std::vector<double> g = {0.0};
  std::vector<std::span<double>> params = {std::span<double>(p)};
  std::vector<std::span<double>> grads = {std::span<double>(g)};
  AdamState adam(AdamConfig{}, params);
  EXPECT_THROW(adam.step(params, grads, 0), UsageError);
}

}  // namespace
}  // namespace cmconf::net
