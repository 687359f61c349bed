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

#include <benchmark/benchmark.h>

#include <vector>

#include "cmconf/cm.hpp"
#include "cmconf/features.hpp"
#include "cmconf/metrics.hpp"
#include "cmconf/net.hpp"
#include "cmconf/protocol.hpp"
#include "cmconf/rng.hpp"

namespace {

using namespace cmconf;

void BM_Extract(benchmark::State& state) {
  const auto spec = protocol::make_generator_spec("far", 1);
  features::Waveform w = protocol::synthesize(spec.populations.at("bonafide"), 3, 16000);
  w.samples.resize(static_cast<std::size_t>(state.range(0)), 0.0);
  const features::LfccConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(features::extract(w, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Extract)->Arg(16000)->Arg(64000);

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(1);
  std::vector<net::DenseLayer> layers = {
      net::DenseLayer::glorot(60, 64, net::Activation::kTanh, rng),
      net::DenseLayer::glorot(64, 64, net::Activation::kTanh, rng),
      net::DenseLayer::glorot(64, 2, net::Activation::kIdentity, rng)};
  std::vector<net::DenseLayer> grads;
  for (const auto& l : layers) grads.push_back(l.zeros_like());
  std::vector<double> x(60);
  for (auto& v : x) v = rng.normal();
  const std::vector<double> g = {1.0, -1.0};
  for (auto _ : state) {
    const auto cache = net::forward(layers, x);
    benchmark::DoNotOptimize(net::backward(layers, cache, g, grads));
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_TrainBatch(benchmark::State& state) {
  cm::TrainConfig config;
  config.model.with_branch = true;
  config.loss = cm::LossKind::kBranch;
  Rng rng(2);
  const auto model = cm::CmModel::init(config.model, rng);
  std::vector<cm::Example> examples(64);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    examples[i].x.resize(60);
    for (auto& v : examples[i].x) v = rng.normal();
    examples[i].label = static_cast<int>(i % 2);
  }
  std::vector<const cm::Example*> batch;
  for (const auto& e : examples) batch.push_back(&e);
  const std::vector<std::uint8_t> hints(batch.size(), 1);
  auto grads = model.zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(cm::batch_loss_and_grad(model, config, batch, 0.1, &grads, hints));
  }
}
BENCHMARK(BM_TrainBatch);

void BM_Auroc(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> pos(n), neg(n);
  for (auto& v : pos) v = rng.normal() + 1.0;
  for (auto& v : neg) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(metrics::auroc(pos, neg));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

void BM_Eer(benchmark::State& state) {
  Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> pos(n), neg(n);
  for (auto& v : pos) v = rng.normal() + 1.0;
  for (auto& v : neg) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(metrics::eer(pos, neg));
}
BENCHMARK(BM_Eer)->Arg(1024)->Arg(65536);

}  // namespace

BENCHMARK_MAIN();
