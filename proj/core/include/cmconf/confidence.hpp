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

#ifndef CMCONF_CONFIDENCE_HPP_
#define CMCONF_CONFIDENCE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmconf/cm.hpp"
#include "cmconf/net.hpp"

namespace cmconf::confidence {

enum class Estimator { kMaxProb, kEnergy, kMDist, kBranch, kSupervised };

std::string_view to_string(Estimator e);
// "max_prob" | "energy" | "m_dist" | "branch" | "supervised"
Estimator parse_estimator(std::string_view text);

struct ConfidenceScore {
  double value = 0.0;
  Estimator estimator = Estimator::kMaxProb;
};

// max_j P(j|x), in [0.5, 1).
ConfidenceScore max_prob(const cm::Logits& l);

// log sum_j exp(l_j).
ConfidenceScore energy(const cm::Logits& l);

struct ClassGaussian {
  std::string label;
  std::size_t count = 0;
  std::vector<double> mean;
  net::Matrix covariance;  // unbiased sample covariance
  net::Matrix precision;   // (covariance + jitter I)^-1
};

struct GaussianStats {
  double jitter = 1e-6;
  std::vector<ClassGaussian> classes;  // sorted by label

  std::size_t dim() const { return classes.empty() ? 0 : classes.front().mean.size(); }
};

struct TaggedEmbedding {
  std::vector<double> h;
  std::string label;
};

// Per-class mean, covariance and jittered precision. Every class present in
// `samples` needs at least two of them, and every label in `required_labels`
// must occur. Throws DataError otherwise.
GaussianStats fit_class_gaussians(std::span<const TaggedEmbedding> samples,
                                  double jitter = 1e-6,
                                  std::span<const std::string> required_labels = {});

// (h - mu)^T P (h - mu) for one class.
double mahalanobis_sq(std::span<const double> h, const ClassGaussian& g);

// -min_k (h - mu_k)^T P_k (h - mu_k), always <= 0.
ConfidenceScore m_dist(std::span<const double> h, const GaussianStats& stats);

// trace of each class covariance, in class order.
std::vector<double> covariance_traces(const GaussianStats& stats);

void save_gaussian_stats(const std::filesystem::path& path, const GaussianStats& stats);
GaussianStats load_gaussian_stats(const std::filesystem::path& path);

// sigmoid(H(h)). Throws UsageError when the model has no branch.
ConfidenceScore branch_confidence(std::span<const double> h, const cm::BranchParams* branch);

// Standalone known/unknown classifier with the CM's architecture and a plain
// two-way head; class 0 is "known". Spoof / bona fide labels are ignored.
class SupervisedEstimator {
 public:
  struct Sample {
    std::vector<double> x;
    bool known = true;
  };

  // Throws DataError unless both known and unknown samples are present.
  static SupervisedEstimator train(std::span<const Sample> samples,
                                   const cm::TrainConfig& config, std::uint64_t seed);

  explicit SupervisedEstimator(cm::CmModel model) : model_(std::move(model)) {}

  // P(known | x).
  ConfidenceScore score(std::span<const double> x) const;

  const cm::CmModel& model() const { return model_; }
  const std::vector<cm::EpochLog>& log() const { return log_; }

 private:
  cm::CmModel model_;
  std::vector<cm::EpochLog> log_;
};

}  // namespace cmconf::confidence

#endif  // CMCONF_CONFIDENCE_HPP_
