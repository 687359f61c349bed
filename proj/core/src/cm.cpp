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

#include "cmconf/cm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "cmconf/batching.hpp"
#include "cmconf/errors.hpp"

namespace cmconf::cm {

std::string_view to_string(HeadKind kind) {
  return kind == HeadKind::kPlain ? "plain" : "am";
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kCrossEntropy:
      return "ce";
    case LossKind::kBranch:
      return "branch";
    case LossKind::kOutlierExposure:
      return "oe";
    case LossKind::kEnergyRegularized:
      return "energy_reg";
  }
  return "?";
}

HeadKind parse_head_kind(std::string_view text) {
  if (text == "plain") return HeadKind::kPlain;
  if (text == "am") return HeadKind::kAngular;
  throw UsageError(fmt::format("unknown head kind '{}' (expected plain|am)", text));
}

LossKind parse_loss_kind(std::string_view text) {
  if (text == "ce") return LossKind::kCrossEntropy;
  if (text == "branch") return LossKind::kBranch;
  if (text == "oe") return LossKind::kOutlierExposure;
  if (text == "energy_reg") return LossKind::kEnergyRegularized;
  throw UsageError(
      fmt::format("unknown loss kind '{}' (expected ce|branch|oe|energy_reg)", text));
}

double log_sum_exp(const std::array<double, 2>& l) {
  const double hi = std::max(l[0], l[1]);
  const double lo = std::min(l[0], l[1]);
  return hi + std::log1p(std::exp(lo - hi));
}

std::array<double, 2> softmax(const std::array<double, 2>& l) {
  const double lse = log_sum_exp(l);
  return {std::exp(l[0] - lse), std::exp(l[1] - lse)};
}

double cm_score(const Logits& l) { return l.values[kBonafide] - l.values[kSpoof]; }

// ---------------------------------------------------------------------------
// Heads

namespace {

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_head_shape(std::span<const double> h, const HeadParams& head) {
  if (head.weight.rows() != 2 || head.weight.cols() != h.size()) {
    throw UsageError(fmt::format("head expects a {}-dim embedding and 2 classes, got {} / {}",
                                 head.weight.cols(), h.size(), head.weight.rows()));
  }
}

void check_target(std::optional<int> target) {
  if (target && *target != kBonafide && *target != kSpoof) {
    throw UsageError(fmt::format("class index {} is not 0 or 1", *target));
  }
}

}  // namespace

Logits plain_logits(std::span<const double> h, const HeadParams& head) {
  check_head_shape(h, head);
  Logits l{{}, HeadKind::kPlain};
  for (int j = 0; j < 2; ++j) l.values[j] = dot(head.weight.row(j), h) + head.bias[j];
  return l;
}

Logits angular_logits(std::span<const double> h, const HeadParams& head,
                      std::optional<int> target) {
  check_head_shape(h, head);
  check_target(target);
  const double h_norm = norm(h);
  if (!(h_norm > 0.0)) throw DataError("angular logits: embedding has zero norm");
  Logits l{{}, HeadKind::kAngular};
  for (int j = 0; j < 2; ++j) {
    const double w_norm = norm(head.weight.row(j));
    if (!(w_norm > 0.0)) throw DataError(fmt::format("angular logits: w_{} has zero norm", j));
    double cosine = dot(head.weight.row(j), h) / (w_norm * h_norm);
    if (target && *target == j) cosine -= head.margin;
    l.values[j] = head.scale * cosine;
  }
  return l;
}

Logits head_logits(std::span<const double> h, const HeadParams& head,
                   std::optional<int> target) {
  return head.kind == HeadKind::kPlain ? plain_logits(h, head)
                                       : angular_logits(h, head, target);
}

std::vector<double> head_backward(std::span<const double> h, const HeadParams& head,
                                  std::optional<int> /*target*/,
                                  const std::array<double, 2>& logit_grad,
                                  HeadParams& head_grad) {
  check_head_shape(h, head);
  std::vector<double> dh(h.size(), 0.0);
  if (head.kind == HeadKind::kPlain) {
    for (int j = 0; j < 2; ++j) {
      const auto w = head.weight.row(j);
      auto gw = head_grad.weight.row(j);
      for (std::size_t i = 0; i < h.size(); ++i) {
        gw[i] += logit_grad[j] * h[i];
        dh[i] += logit_grad[j] * w[i];
      }
      head_grad.bias[j] += logit_grad[j];
    }
    return dh;
  }
  // The margin is a constant offset, so it does not enter the gradient.
  const double h_norm = norm(h);
  for (int j = 0; j < 2; ++j) {
    const auto w = head.weight.row(j);
    auto gw = head_grad.weight.row(j);
    const double w_norm = norm(w);
    const double cosine = dot(w, h) / (w_norm * h_norm);
    const double g = logit_grad[j] * head.scale;
    for (std::size_t i = 0; i < h.size(); ++i) {
      dh[i] += g * (w[i] / (w_norm * h_norm) - cosine * h[i] / (h_norm * h_norm));
      gw[i] += g * (h[i] / (w_norm * h_norm) - cosine * w[i] / (w_norm * w_norm));
    }
  }
  return dh;
}

// ---------------------------------------------------------------------------
// Losses

LossGrad cross_entropy_loss(const Logits& l, int y) {
  check_target(y);
  const double lse = log_sum_exp(l.values);
  LossGrad out;
  out.loss = lse - l.values[y];
  const auto p = softmax(l.values);
  for (int j = 0; j < 2; ++j) out.d_logits[j] = p[j] - (j == y ? 1.0 : 0.0);
  return out;
}

LossGrad confidence_branch_loss(const Logits& l, double c, int y, double lambda) {
  check_target(y);
  if (!(c > 0.0 && c <= 1.0)) {
    throw UsageError(fmt::format("confidence {} is outside (0, 1]", c));
  }
  if (!(lambda >= 0.0)) throw UsageError("confidence branch: lambda must be >= 0");
  const double lse = log_sum_exp(l.values);
  const auto p = softmax(l.values);
  const double log_p_y = l.values[y] - lse;
  // log P~_y = log(c P_y + (1 - c)), evaluated in log space.
  const double a = std::log(c) + log_p_y;
  double log_pt = a;
  if (c < 1.0) {
    const double b = std::log1p(-c);
    const double hi = std::max(a, b);
    log_pt = hi + std::log1p(std::exp(std::min(a, b) - hi));
  }
  LossGrad out;
  out.loss = -log_pt - lambda * std::log(c);
  const double w_model = std::exp(a - log_pt);  // c P_y / P~_y
  for (int j = 0; j < 2; ++j) {
    out.d_logits[j] = -w_model * ((j == y ? 1.0 : 0.0) - p[j]);
  }
  out.d_confidence = p[1 - y] * std::exp(-log_pt) - lambda / c;
  return out;
}

double budget_update(double lambda, double mean_neg_log_c, const BudgetConfig& config) {
  const double next =
      mean_neg_log_c > config.budget ? lambda / config.factor : lambda * config.factor;
  return std::clamp(next, config.min_lambda, config.max_lambda);
}

LossGrad outlier_exposure_loss(const Logits& l, bool is_unknown, int y, double weight) {
  if (!is_unknown) return cross_entropy_loss(l, y);
  const double lse = log_sum_exp(l.values);
  const auto p = softmax(l.values);
  LossGrad out;
  out.loss = weight * (lse - 0.5 * (l.values[0] + l.values[1]));
  for (int j = 0; j < 2; ++j) out.d_logits[j] = weight * (p[j] - 0.5);
  return out;
}

LossGrad energy_regularized_loss(const Logits& l, bool is_unknown, int y,
                                 const EnergyLossConfig& config) {
  if (!(config.margin_known > config.margin_unknown)) {
    throw UsageError("energy loss: margin_known must exceed margin_unknown");
  }
  const double lse = log_sum_exp(l.values);
  const auto p = softmax(l.values);
  LossGrad out;
  if (!is_unknown) {
    out = cross_entropy_loss(l, y);
    const double gap = std::max(0.0, config.margin_known - lse);
    out.loss += config.weight * gap * gap;
    for (int j = 0; j < 2; ++j) out.d_logits[j] += -2.0 * config.weight * gap * p[j];
  } else {
    const double gap = std::max(0.0, lse - config.margin_unknown);
    out.loss = config.weight * gap * gap;
    for (int j = 0; j < 2; ++j) out.d_logits[j] = 2.0 * config.weight * gap * p[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

CmModel CmModel::init(const ModelConfig& config, Rng& rng) {
  if (config.hidden.empty()) throw UsageError("model needs at least one hidden layer");
  CmModel model;
  std::size_t in = config.input_dim;
  for (std::size_t width : config.hidden) {
    model.trunk.push_back(net::DenseLayer::glorot(in, width, net::Activation::kTanh, rng));
    in = width;
  }
  model.head.kind = config.head;
  model.head.margin = config.am_margin;
  model.head.scale = config.am_scale;
  // Glorot over (embedding, 2 classes); rows are the class vectors.
  const net::DenseLayer head = net::DenseLayer::glorot(2, in, net::Activation::kIdentity, rng);
  model.head.weight = head.weight;
  if (config.with_branch) {
    BranchParams branch;
    branch.hidden() =
        net::DenseLayer::glorot(in, config.branch_hidden, net::Activation::kTanh, rng);
    branch.output() =
        net::DenseLayer::glorot(config.branch_hidden, 1, net::Activation::kIdentity, rng);
    model.branch = std::move(branch);
  }
  return model;
}

CmModel CmModel::zeros_like() const {
  CmModel z;
  for (const auto& layer : trunk) z.trunk.push_back(layer.zeros_like());
  z.head.kind = head.kind;
  z.head.margin = head.margin;
  z.head.scale = head.scale;
  z.head.weight = net::Matrix(head.weight.rows(), head.weight.cols());
  z.head.bias.assign(head.bias.size(), 0.0);
  if (branch) {
    z.branch = BranchParams{{branch->hidden().zeros_like(), branch->output().zeros_like()}};
  }
  return z;
}

std::vector<std::span<double>> CmModel::parameters() {
  std::vector<std::span<double>> views;
  net::append_parameter_views(trunk, views);
  views.push_back(head.weight.values());
  views.push_back(head.bias);
  if (branch) net::append_parameter_views(branch->layers, views);
  return views;
}

std::vector<double> CmModel::embed(std::span<const double> x) const {
  return net::forward(trunk, x).output();
}

namespace {

double branch_logit(const BranchParams& branch, std::span<const double> h,
                    net::ForwardCache* cache = nullptr) {
  auto fwd = net::forward(branch.layers, h);
  const double z = fwd.output()[0];
  if (cache) *cache = std::move(fwd);
  return z;
}

}  // namespace

ScoredTrial CmModel::score(std::span<const double> x) const {
  ScoredTrial out;
  out.embedding = embed(x);
  out.logits = head_logits(out.embedding, head);
  if (branch) out.branch_confidence = net::sigmoid(branch_logit(*branch, out.embedding));
  return out;
}

std::vector<NamedTensor> CmModel::to_tensors() const {
  std::vector<NamedTensor> out;
  const auto add = [&out](std::string name, const net::Matrix& m) {
    out.push_back({std::move(name), m.rows(), m.cols(),
                   std::vector<double>(m.values().begin(), m.values().end())});
  };
  const auto add_vec = [&out](std::string name, const std::vector<double>& v) {
    out.push_back({std::move(name), 1, v.size(), v});
  };
  for (std::size_t l = 0; l < trunk.size(); ++l) {
    add(fmt::format("trunk.{}.weight", l), trunk[l].weight);
    add_vec(fmt::format("trunk.{}.bias", l), trunk[l].bias);
  }
  add("head.weight", head.weight);
  add_vec("head.bias", head.bias);
  if (branch) {
    add("branch.hidden.weight", branch->hidden().weight);
    add_vec("branch.hidden.bias", branch->hidden().bias);
    add("branch.output.weight", branch->output().weight);
    add_vec("branch.output.bias", branch->output().bias);
  }
  return out;
}

CmModel CmModel::from_tensors(std::span<const NamedTensor> tensors, HeadKind kind,
                              double margin, double scale) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t;
  const auto take = [&by_name](const std::string& name) -> const NamedTensor& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError(fmt::format("model file lacks tensor '{}'", name));
    return *it->second;
  };
  const auto layer = [&take](const std::string& prefix, net::Activation act) {
    const NamedTensor& w = take(prefix + ".weight");
    const NamedTensor& b = take(prefix + ".bias");
    if (b.values.size() != w.cols) {
      throw DataError(fmt::format("'{}' bias does not match its weight", prefix));
    }
    net::DenseLayer out = net::DenseLayer::zeros(w.rows, w.cols, act);
    std::copy(w.values.begin(), w.values.end(), out.weight.values().begin());
    out.bias = b.values;
    return out;
  };

  CmModel model;
  for (std::size_t l = 0; by_name.contains(fmt::format("trunk.{}.weight", l)); ++l) {
    model.trunk.push_back(layer(fmt::format("trunk.{}", l), net::Activation::kTanh));
    if (l > 0 && model.trunk[l].in_dim() != model.trunk[l - 1].out_dim()) {
      throw DataError("model file: trunk layer shapes do not chain");
    }
  }
  if (model.trunk.empty()) throw DataError("model file has no trunk layers");
  const NamedTensor& hw = take("head.weight");
  if (hw.rows != 2 || hw.cols != model.embedding_dim()) {
    throw DataError("model file: head shape does not match the embedding");
  }
  model.head.kind = kind;
  model.head.margin = margin;
  model.head.scale = scale;
  model.head.weight = net::Matrix(hw.rows, hw.cols);
  std::copy(hw.values.begin(), hw.values.end(), model.head.weight.values().begin());
  model.head.bias = take("head.bias").values;
  if (by_name.contains("branch.hidden.weight")) {
    model.branch = BranchParams{{layer("branch.hidden", net::Activation::kTanh),
                                 layer("branch.output", net::Activation::kIdentity)}};
    if (model.branch->hidden().in_dim() != model.embedding_dim() ||
        model.branch->output().in_dim() != model.branch->hidden().out_dim() ||
        model.branch->output().out_dim() != 1) {
      throw DataError("model file: branch shapes do not match the embedding");
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training

namespace {

bool uses_unknown(LossKind loss) {
  return loss == LossKind::kOutlierExposure || loss == LossKind::kEnergyRegularized;
}

}  // namespace

BatchResult batch_loss_and_grad(const CmModel& model, const TrainConfig& config,
                                std::span<const Example* const> batch, double lambda,
                                CmModel* grads, std::span<const std::uint8_t> hints) {
  if (!hints.empty() && hints.size() != batch.size()) {
    throw UsageError("hint mask size differs from the batch size");
  }
  if (config.loss == LossKind::kBranch && !model.branch) {
    throw UsageError("confidence-branch loss needs a model with a branch");
  }
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
  for (const Example* ex : batch) (ex->known ? n_known : n_unknown) += 1;

  BatchResult result;
  std::size_t correct = 0;
  for (std::size_t idx = 0; idx < batch.size(); ++idx) {
    const Example* ex = batch[idx];
    const double weight = 1.0 / static_cast<double>(ex->known ? n_known : n_unknown);
    const net::ForwardCache trunk_cache = net::forward(model.trunk, ex->x);
    const std::vector<double>& h = trunk_cache.output();
    const std::optional<int> target =
        ex->known ? std::optional<int>(ex->label) : std::nullopt;
    const Logits logits = head_logits(h, model.head, target);
    if (ex->known) {
      const int predicted = logits.values[kBonafide] >= logits.values[kSpoof] ? kBonafide
                                                                              : kSpoof;
      correct += predicted == ex->label ? 1 : 0;
    }

    LossGrad lg;
    double c = 1.0;
    net::ForwardCache branch_cache;
    switch (config.loss) {
      case LossKind::kCrossEntropy:
        if (!ex->known) throw DataError("cross-entropy training got an unknown example");
        lg = cross_entropy_loss(logits, ex->label);
        break;
      case LossKind::kBranch: {
        if (!ex->known) throw DataError("confidence-branch training got an unknown example");
        const double z = branch_logit(*model.branch, h, &branch_cache);
        c = net::sigmoid(z);
        if (hints.empty() || hints[idx] != 0) {
          lg = confidence_branch_loss(logits, c, ex->label, lambda);
        } else {
          lg = cross_entropy_loss(logits, ex->label);
          lg.loss -= lambda * std::log(c);
          lg.d_confidence = -lambda / c;
        }
        // -log c = softplus(-z)
        result.mean_neg_log_c += (std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)))) /
                                 static_cast<double>(n_known);
        break;
      }
      case LossKind::kOutlierExposure:
        lg = outlier_exposure_loss(logits, !ex->known, ex->label, config.oe_weight);
        break;
      case LossKind::kEnergyRegularized:
        lg = energy_regularized_loss(logits, !ex->known, ex->label, config.energy);
        break;
    }
    result.loss += weight * lg.loss;
    if (grads == nullptr) continue;

    const std::array<double, 2> dl = {weight * lg.d_logits[0], weight * lg.d_logits[1]};
    std::vector<double> dh = head_backward(h, model.head, target, dl, grads->head);
    if (config.loss == LossKind::kBranch) {
      const double dz = weight * lg.d_confidence * c * (1.0 - c);
      const double dz_vec[] = {dz};
      const auto dh_branch =
          net::backward(model.branch->layers, branch_cache, dz_vec, grads->branch->layers);
      for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dh_branch[i];
    }
    net::backward(model.trunk, trunk_cache, dh, grads->trunk);
  }
  result.accuracy = n_known ? static_cast<double>(correct) / static_cast<double>(n_known) : 0.0;
  return result;
}

TrainResult train(const TrainConfig& config, std::span<const Example> examples,
                  std::uint64_t seed) {
  if (config.epochs <= 0) throw UsageError("train: epochs must be positive");
  std::vector<std::size_t> known;
  std::vector<std::size_t> unknown;
  std::vector<int> labels;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].x.size() != config.model.input_dim) {
      throw DataError(fmt::format("example {} has dim {}, model expects {}", i,
                                  examples[i].x.size(), config.model.input_dim));
    }
    if (examples[i].known) {
      known.push_back(i);
      labels.push_back(examples[i].label);
    } else {
      unknown.push_back(i);
    }
  }
  if (uses_unknown(config.loss) && unknown.empty()) {
    throw DataError(fmt::format("loss '{}' needs unknown training trials",
                                to_string(config.loss)));
  }
  if (uses_unknown(config.loss) && config.unknown_per_batch <= 0) {
    throw UsageError("unknown_per_batch must be positive");
  }

  ModelConfig model_config = config.model;
  model_config.with_branch = config.loss == LossKind::kBranch;
  Rng init_rng(derive_seed(seed, "init"));
  TrainResult result{CmModel::init(model_config, init_rng), {}};
  CmModel& model = result.model;

  const protocol::BalancedBatcher batcher(labels, config.batch_size,
                                          derive_seed(seed, "batches"));
  std::optional<protocol::CyclicSampler> unknown_sampler;
  if (uses_unknown(config.loss)) {
    unknown_sampler.emplace(unknown.size(), derive_seed(seed, "unknown"));
  }

  const auto params = model.parameters();
  net::AdamState adam(config.adam, params);
  double lambda = config.loss == LossKind::kBranch ? config.budget.initial_lambda : 0.0;

  if (config.loss == LossKind::kBranch &&
      !(config.hint_fraction >= 0.0 && config.hint_fraction <= 1.0)) {
    throw UsageError("hint_fraction must be in [0, 1]");
  }
  Rng hint_rng(derive_seed(seed, "hints"));
  std::vector<std::uint8_t> hints;

  std::vector<const Example*> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    double acc_sum = 0.0;
    const auto batches = batcher.epoch(epoch);
    for (const auto& indices : batches) {
      batch.clear();
      for (std::size_t k : indices) batch.push_back(&examples[known[k]]);
      if (unknown_sampler) {
        for (int u = 0; u < config.unknown_per_batch; ++u) {
          batch.push_back(&examples[unknown[unknown_sampler->next()]]);
        }
      }
      hints.clear();
      if (config.loss == LossKind::kBranch) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
          hints.push_back(hint_rng.uniform() < config.hint_fraction ? 1 : 0);
        }
      }
      CmModel grads = model.zeros_like();
      const BatchResult br = batch_loss_and_grad(model, config, batch, lambda, &grads, hints);
      if (!std::isfinite(br.loss)) {
        throw DataError(fmt::format("training diverged at epoch {}", epoch));
      }
      const auto grad_views = grads.parameters();
      adam.step(params, grad_views, epoch);
      if (config.loss == LossKind::kBranch) {
        lambda = budget_update(lambda, br.mean_neg_log_c, config.budget);
      }
      loss_sum += br.loss;
      acc_sum += br.accuracy;
    }
    const double n = static_cast<double>(batches.size());
    result.log.push_back({epoch, loss_sum / n, adam.learning_rate(epoch), lambda, acc_sum / n});
  }
  return result;
}

std::string training_log_csv(std::span<const EpochLog> log) {
  std::string out = "epoch,loss,lr,lambda,accuracy\n";
  for (const auto& e : log) {
    out += fmt::format("{},{:.9g},{:.9g},{:.9g},{:.6f}\n", e.epoch, e.loss, e.learning_rate,
                       e.lambda, e.accuracy);
  }
  return out;
}

void save_model(const std::filesystem::path& path, const CmModel& model,
                const Manifest& extra) {
  const auto tensors = model.to_tensors();
  write_tensor_file(path, tensors);
  Manifest manifest = extra;
  manifest["format_version"] = std::to_string(kTensorFileVersion);
  manifest["head"] = std::string(to_string(model.head.kind));
  manifest["am_margin"] = fmt::format("{}", model.head.margin);
  manifest["am_scale"] = fmt::format("{}", model.head.scale);
  manifest["has_branch"] = model.branch ? "1" : "0";
  for (const auto& t : tensors) {
    manifest["tensor." + t.name] = fmt::format("{}x{}", t.rows, t.cols);
  }
  write_manifest(manifest_path(path), manifest);
}

LoadedModel load_model(const std::filesystem::path& path) {
  Manifest manifest = read_manifest(manifest_path(path));
  const auto get = [&](const std::string& key) {
    const auto it = manifest.find(key);
    if (it == manifest.end()) {
      throw DataError(fmt::format("'{}': manifest lacks '{}'", path.string(), key));
    }
    return it->second;
  };
  const HeadKind kind = parse_head_kind(get("head"));
  const double margin = std::stod(get("am_margin"));
  const double scale = std::stod(get("am_scale"));
  const auto tensors = read_tensor_file(path);
  return {CmModel::from_tensors(tensors, kind, margin, scale), std::move(manifest)};
}

}  // namespace cmconf::cm
