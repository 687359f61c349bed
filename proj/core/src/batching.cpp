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

#include "cmconf/batching.hpp"

#include <numeric>
#include <string>

#include <fmt/format.h>

#include "cmconf/errors.hpp"
#include "cmconf/rng.hpp"

namespace cmconf::protocol {
namespace {

std::vector<std::size_t> shuffled_passes(const std::vector<std::size_t>& items,
                                         std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(count + items.size());
  while (out.size() < count) {
    std::vector<std::size_t> pass = items;
    shuffle(pass.begin(), pass.end(), rng);
    out.insert(out.end(), pass.begin(), pass.end());
  }
  out.resize(count);
  return out;
}

}  // namespace

BalancedBatcher::BalancedBatcher(std::span<const int> labels, int batch_size,
                                 std::uint64_t seed)
    : seed_(seed) {
  if (batch_size <= 0 || batch_size % 2 != 0) {
    throw UsageError(fmt::format("balanced batches need a positive even batch size, got {}",
                                 batch_size));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError(fmt::format("label {} at index {} is not binary", labels[i], i));
    }
    by_class_[labels[i]].push_back(i);
  }
  if (by_class_[0].empty() || by_class_[1].empty()) {
    throw DataError("balanced batches need both classes to be present");
  }
  half_ = static_cast<std::size_t>(batch_size / 2);
  const std::size_t majority = std::max(by_class_[0].size(), by_class_[1].size());
  batches_per_epoch_ = (majority + half_ - 1) / half_;
}

std::vector<std::vector<std::size_t>> BalancedBatcher::epoch(int epoch_index) const {
  Rng rng(derive_seed(seed_, "epoch/" + std::to_string(epoch_index)));
  const std::size_t per_class = batches_per_epoch_ * half_;
  const auto first = shuffled_passes(by_class_[0], per_class, rng);
  const auto second = shuffled_passes(by_class_[1], per_class, rng);
  std::vector<std::vector<std::size_t>> batches(batches_per_epoch_);
  for (std::size_t b = 0; b < batches_per_epoch_; ++b) {
    auto& batch = batches[b];
    batch.reserve(2 * half_);
    batch.insert(batch.end(), first.begin() + b * half_, first.begin() + (b + 1) * half_);
    batch.insert(batch.end(), second.begin() + b * half_, second.begin() + (b + 1) * half_);
    shuffle(batch.begin(), batch.end(), rng);
  }
  return batches;
}

CyclicSampler::CyclicSampler(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) {
  if (n == 0) throw DataError("cannot sample from an empty set");
}

std::size_t CyclicSampler::next() {
  if (pos_ == order_.size()) refill();
  return order_[pos_++];
}

void CyclicSampler::refill() {
  Rng rng(derive_seed(seed_, "pass/" + std::to_string(pass_++)));
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  shuffle(order_.begin(), order_.end(), rng);
  pos_ = 0;
}

}  // namespace cmconf::protocol
