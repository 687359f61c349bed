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

#ifndef CMCONF_CM_HPP_
#define CMCONF_CM_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmconf/net.hpp"
#include "cmconf/tensor_file.hpp"

namespace cmconf::cm {

// Class indices. Index 0 is bona fide, index 1 is spoof; the CM score is
// l[kBonafide] - l[kSpoof], higher meaning more bona fide.
inline constexpr int kBonafide = 0;
inline constexpr int kSpoof = 1;

enum class HeadKind { kPlain, kAngular };
enum class LossKind { kCrossEntropy, kBranch, kOutlierExposure, kEnergyRegularized };

std::string_view to_string(HeadKind kind);
std::string_view to_string(LossKind kind);
// Accepts "plain" / "am" and "ce" / "branch" / "oe" / "energy_reg".
HeadKind parse_head_kind(std::string_view text);
LossKind parse_loss_kind(std::string_view text);

struct Logits {
  std::array<double, 2> values{};
  HeadKind kind = HeadKind::kPlain;
};

// Rows of `weight` are the class vectors w_j. The plain head uses the bias,
// the angular (AM-softmax) head uses margin and scale and ignores the bias.
struct HeadParams {
  HeadKind kind = HeadKind::kPlain;
  net::Matrix weight;  // 2 x embedding dim
  std::vector<double> bias = std::vector<double>(2, 0.0);
  double margin = 0.2;
  double scale = 10.0;
};

// Confidence branch: tanh hidden layer, then a single linear unit whose
// sigmoid is the confidence.
struct BranchParams {
  std::array<net::DenseLayer, 2> layers;  // hidden (tanh), output (identity)

  net::DenseLayer& hidden() { return layers[0]; }
  const net::DenseLayer& hidden() const { return layers[0]; }
  net::DenseLayer& output() { return layers[1]; }
  const net::DenseLayer& output() const { return layers[1]; }
};

struct ModelConfig {
  std::size_t input_dim = 60;
  std::vector<std::size_t> hidden = {64, 64};
  HeadKind head = HeadKind::kPlain;
  double am_margin = 0.2;
  double am_scale = 10.0;
  bool with_branch = false;
  std::size_t branch_hidden = 128;
};

struct ScoredTrial {
  std::vector<double> embedding;
  Logits logits;
  std::optional<double> branch_confidence;
};

// Pooled-feature scoring model: dense tanh trunk -> embedding -> head, with
// an optional confidence branch reading the embedding.
struct CmModel {
  std::vector<net::DenseLayer> trunk;
  HeadParams head;
  std::optional<BranchParams> branch;

  static CmModel init(const ModelConfig& config, Rng& rng);
  CmModel zeros_like() const;

  std::size_t input_dim() const { return trunk.front().in_dim(); }
  std::size_t embedding_dim() const { return trunk.back().out_dim(); }

  // Views over every trainable value, in a fixed order shared by zeros_like().
  std::vector<std::span<double>> parameters();

  std::vector<double> embed(std::span<const double> x) const;

  // Inference: no margin, branch confidence when a branch exists.
  ScoredTrial score(std::span<const double> x) const;

  std::vector<NamedTensor> to_tensors() const;
  static CmModel from_tensors(std::span<const NamedTensor> tensors, HeadKind kind,
                              double margin, double scale);
};

// l = W h + b.
Logits plain_logits(std::span<const double> h, const HeadParams& head);

// l_j = scale * cos(theta_j). With a target class (training only) the target
// logit becomes scale * (cos(theta_y) - margin). Throws DataError when h or a
// class vector has zero norm.
Logits angular_logits(std::span<const double> h, const HeadParams& head,
                      std::optional<int> target = std::nullopt);

Logits head_logits(std::span<const double> h, const HeadParams& head,
                   std::optional<int> target = std::nullopt);

// Gradient of a loss through head_logits: accumulates into head_grad and
// returns dL/dh.
std::vector<double> head_backward(std::span<const double> h, const HeadParams& head,
                                  std::optional<int> target,
                                  const std::array<double, 2>& logit_grad,
                                  HeadParams& head_grad);

double cm_score(const Logits& l);

// Numerically stable helpers shared with the confidence estimators.
double log_sum_exp(const std::array<double, 2>& l);
std::array<double, 2> softmax(const std::array<double, 2>& l);

struct LossGrad {
  double loss = 0.0;
  std::array<double, 2> d_logits{};
  double d_confidence = 0.0;
};

// -log P(y|x); gradient softmax - onehot(y).
LossGrad cross_entropy_loss(const Logits& l, int y);

// -log(c P_y + (1 - c)) - lambda log c. c must lie in (0, 1]; c == 1 reduces
// exactly to cross_entropy_loss. Throws UsageError otherwise.
LossGrad confidence_branch_loss(const Logits& l, double c, int y, double lambda);

struct BudgetConfig {
  double initial_lambda = 0.1;
  double budget = 0.3;
  double factor = 0.99;
  double min_lambda = 1e-4;
  double max_lambda = 10.0;
};

// lambda / factor when mean(-log c) exceeds the budget, lambda * factor
// otherwise (ties decrease), clipped to [min_lambda, max_lambda].
double budget_update(double lambda, double mean_neg_log_c, const BudgetConfig& config);

// Known trials: cross entropy. Unknown trials: weight * cross entropy against
// the uniform distribution, -weight / 2 * sum_j log P_j.
LossGrad outlier_exposure_loss(const Logits& l, bool is_unknown, int y, double weight);

struct EnergyLossConfig {
  double weight = 0.1;
  double margin_known = 1.0;     // known trials pushed above this log-sum-exp
  double margin_unknown = -1.0;  // unknown trials pushed below this one
};

// Known: CE + weight * max(0, m_known - lse(l))^2.
// Unknown: weight * max(0, lse(l) - m_unknown)^2.
LossGrad energy_regularized_loss(const Logits& l, bool is_unknown, int y,
                                 const EnergyLossConfig& config);

struct Example {
  std::vector<double> x;
  int label = kBonafide;  // ignored for unknown examples
  bool known = true;
};

struct TrainConfig {
  ModelConfig model;
  LossKind loss = LossKind::kCrossEntropy;
  int epochs = 30;
  int batch_size = 64;
  int unknown_per_batch = 32;  // OE and energy losses only
  net::AdamConfig adam;
  BudgetConfig budget;
  double oe_weight = 0.5;
  EnergyLossConfig energy;
  double hint_fraction = 0.5;  // branch loss: share of each batch given hints
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
  double lambda = 0.0;  // confidence-branch budget multiplier, 0 otherwise
  double accuracy = 0.0;
};

struct TrainResult {
  CmModel model;
  std::vector<EpochLog> log;
};

struct BatchResult {
  double loss = 0.0;
  double mean_neg_log_c = 0.0;  // confidence-branch loss only
  double accuracy = 0.0;        // over known examples
};

// Mean loss of one mini-batch; known and unknown examples are averaged
// separately and the two means summed. When `grads` is non-null (a
// zeros_like() of the model) the gradient is accumulated into it.
// Branch loss only: `hints[i] == 0` scores example i with c = 1 in the
// likelihood term (the -lambda log c term stays); empty means every example
// gets hints.
BatchResult batch_loss_and_grad(const CmModel& model, const TrainConfig& config,
                                std::span<const Example* const> batch, double lambda,
                                CmModel* grads, std::span<const std::uint8_t> hints = {});

// Trains from scratch with balanced mini-batches. Deterministic given seed.
// Throws DataError when the known examples lack a class, or when the loss
// needs unknown examples and there are none.
TrainResult train(const TrainConfig& config, std::span<const Example> examples,
                  std::uint64_t seed);

// Line-oriented CSV: epoch,loss,lr,lambda,accuracy.
std::string training_log_csv(std::span<const EpochLog> log);

void save_model(const std::filesystem::path& path, const CmModel& model,
                const Manifest& extra);
struct LoadedModel {
  CmModel model;
  Manifest manifest;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace cmconf::cm

#endif  // CMCONF_CM_HPP_
