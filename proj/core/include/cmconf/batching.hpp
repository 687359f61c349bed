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

#ifndef CMCONF_BATCHING_HPP_
#define CMCONF_BATCHING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cmconf::protocol {

// Class-balanced mini-batches over binary labels (0 / 1). Every batch holds
// batch_size / 2 items of each class. An epoch has enough batches to visit
// every majority-class item once; the minority class is resampled by
// concatenating independent shuffled passes, so each minority item appears
// at least once per epoch as well.
class BalancedBatcher {
 public:
  // Throws UsageError for an odd or non-positive batch size and DataError
  // when either class is empty.
  BalancedBatcher(std::span<const int> labels, int batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const { return batches_per_epoch_; }

  // Deterministic function of (seed, epoch). Items within a batch are
  // interleaved in shuffled order.
  std::vector<std::vector<std::size_t>> epoch(int epoch_index) const;

 private:
  std::vector<std::size_t> by_class_[2];
  std::size_t half_ = 0;
  std::size_t batches_per_epoch_ = 0;
  std::uint64_t seed_ = 0;
};

// Endless stream of indices built from shuffled passes over [0, n).
class CyclicSampler {
 public:
  CyclicSampler(std::size_t n, std::uint64_t seed);
  std::size_t next();

 private:
  void refill();
  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t pass_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace cmconf::protocol

#endif  // CMCONF_BATCHING_HPP_
