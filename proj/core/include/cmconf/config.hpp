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

#ifndef CMCONF_CONFIG_HPP_
#define CMCONF_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cmconf/cm.hpp"
#include "cmconf/confidence.hpp"
#include "cmconf/features.hpp"
#include "cmconf/protocol.hpp"

namespace cmconf {

// Everything one run needs. Serialized as an INI-style file: "[section]"
// headers and "key = value" lines; see RunConfig::to_ini() for every key.
struct RunConfig {
  // [run]
  std::string protocol = "T1-E1";
  cm::HeadKind head = cm::HeadKind::kPlain;
  cm::LossKind loss = cm::LossKind::kCrossEntropy;
  std::vector<confidence::Estimator> estimators = {confidence::Estimator::kMaxProb,
                                                   confidence::Estimator::kEnergy};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::filesystem::path output_dir = "out";
  int jobs = 1;
  double target_tpr = 0.95;

  // [data]
  std::string preset = "far";
  std::uint64_t data_seed = 2021;
  protocol::Counts counts;

  // [features]
  features::LfccConfig lfcc;

  // [train] and [cm]
  cm::TrainConfig train;

  // [confidence]
  double covariance_jitter = 1e-6;
  bool gaussian_per_attack = true;  // false: two classes, bona fide / spoof

  std::string train_set() const;
  std::string test_set() const;

  // Sets one "section.key" entry. Throws UsageError for unknown keys or
  // unparsable values.
  void set(std::string_view dotted_key, std::string_view value);

  // Throws UsageError when the combination is inconsistent (unknown protocol,
  // supervised estimator without unknown training data, branch estimator
  // without the branch loss, ...). Called before any work is done.
  void validate() const;

  std::string to_ini() const;
};

// Defaults overridden by the file's entries.
RunConfig load_run_config(const std::filesystem::path& path);

// Train set of a protocol has unknown trials (T2 / T3).
bool train_set_has_unknown(std::string_view train_set);

}  // namespace cmconf

#endif  // CMCONF_CONFIG_HPP_
