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

#include "cmconf/confidence.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "cmconf/errors.hpp"
#include "cmconf/tensor_file.hpp"

namespace cmconf::confidence {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kMaxProb:
      return "max_prob";
    case Estimator::kEnergy:
      return "energy";
    case Estimator::kMDist:
      return "m_dist";
    case Estimator::kBranch:
      return "branch";
    case Estimator::kSupervised:
      return "supervised";
  }
  return "?";
}

Estimator parse_estimator(std::string_view text) {
  for (Estimator e : {Estimator::kMaxProb, Estimator::kEnergy, Estimator::kMDist,
                      Estimator::kBranch, Estimator::kSupervised}) {
    if (text == to_string(e)) return e;
  }
  throw UsageError(fmt::format(
      "unknown estimator '{}' (expected max_prob|energy|m_dist|branch|supervised)", text));
}

ConfidenceScore max_prob(const cm::Logits& l) {
  const auto p = cm::softmax(l.values);
  return {std::max(p[0], p[1]), Estimator::kMaxProb};
}

ConfidenceScore energy(const cm::Logits& l) {
  return {cm::log_sum_exp(l.values), Estimator::kEnergy};
}

GaussianStats fit_class_gaussians(std::span<const TaggedEmbedding> samples, double jitter,
                                  std::span<const std::string> required_labels) {
  if (!(jitter >= 0.0)) throw UsageError("covariance jitter must be >= 0");
  if (samples.empty()) throw DataError("fit_class_gaussians: no samples");
  const std::size_t dim = samples.front().h.size();
  std::map<std::string, std::vector<const TaggedEmbedding*>> groups;
  for (const auto& s : samples) {
    if (s.h.size() != dim) throw DataError("fit_class_gaussians: inconsistent dimensions");
    groups[s.label].push_back(&s);
  }
  for (const auto& label : required_labels) {
    if (!groups.contains(label)) {
      throw DataError(fmt::format("fit_class_gaussians: class '{}' has no samples", label));
    }
  }

  GaussianStats stats;
  stats.jitter = jitter;
  for (const auto& [label, members] : groups) {
    const std::size_t n = members.size();
    if (n < 2) {
      throw DataError(
          fmt::format("fit_class_gaussians: class '{}' has {} sample(s), need >= 2", label, n));
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (const auto* m : members) mean += Eigen::Map<const Eigen::VectorXd>(m->h.data(), dim);
    mean /= static_cast<double>(n);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto* m : members) {
      const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(m->h.data(), dim) - mean;
      cov.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(n - 1);
    const Eigen::MatrixXd regularized =
        cov + jitter * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), dim);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(regularized);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw DataError(fmt::format("class '{}': covariance is not invertible", label));
    }
    Eigen::MatrixXd precision =
        ldlt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim), dim));
    precision = 0.5 * (precision + precision.transpose()).eval();

    ClassGaussian g;
    g.label = label;
    g.count = n;
    g.mean.assign(mean.data(), mean.data() + dim);
    g.covariance = net::Matrix(dim, dim);
    g.precision = net::Matrix(dim, dim);
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        g.covariance(r, c) = cov(r, c);
        g.precision(r, c) = precision(r, c);
      }
    }
    stats.classes.push_back(std::move(g));
  }
  return stats;
}

double mahalanobis_sq(std::span<const double> h, const ClassGaussian& g) {
  const std::size_t dim = g.mean.size();
  if (h.size() != dim) {
    throw UsageError(fmt::format("m_dist: embedding dim {} does not match statistics dim {}",
                                 h.size(), dim));
  }
  std::vector<double> d(dim);
  for (std::size_t i = 0; i < dim; ++i) d[i] = h[i] - g.mean[i];
  double q = 0.0;
  for (std::size_t r = 0; r < dim; ++r) {
    if (d[r] == 0.0) continue;
    const auto row = g.precision.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += row[c] * d[c];
    q += d[r] * acc;
  }
  return q;
}

ConfidenceScore m_dist(std::span<const double> h, const GaussianStats& stats) {
  if (stats.classes.empty()) throw UsageError("m_dist: no class statistics");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : stats.classes) best = std::min(best, mahalanobis_sq(h, g));
  // Rounding can leave a tiny negative quadratic form for a PSD precision.
  return {-std::max(best, 0.0), Estimator::kMDist};
}

std::vector<double> covariance_traces(const GaussianStats& stats) {
  std::vector<double> traces;
  for (const auto& g : stats.classes) {
    double t = 0.0;
    for (std::size_t i = 0; i < g.covariance.rows(); ++i) t += g.covariance(i, i);
    traces.push_back(t);
  }
  return traces;
}

void save_gaussian_stats(const std::filesystem::path& path, const GaussianStats& stats) {
  std::vector<NamedTensor> tensors;
  Manifest manifest;
  manifest["format_version"] = std::to_string(kTensorFileVersion);
  manifest["kind"] = "gaussian_stats";
  manifest["jitter"] = fmt::format("{}", stats.jitter);
  manifest["classes"] = std::to_string(stats.classes.size());
  const auto traces = covariance_traces(stats);
  for (std::size_t k = 0; k < stats.classes.size(); ++k) {
    const auto& g = stats.classes[k];
    const std::string prefix = "class." + g.label;
    const std::size_t dim = g.mean.size();
    tensors.push_back({prefix + ".mean", 1, dim, g.mean});
    tensors.push_back({prefix + ".covariance", dim, dim,
                       {g.covariance.values().begin(), g.covariance.values().end()}});
    tensors.push_back({prefix + ".precision", dim, dim,
                       {g.precision.values().begin(), g.precision.values().end()}});
    manifest[prefix + ".count"] = std::to_string(g.count);
    manifest[prefix + ".trace"] = fmt::format("{:.9g}", traces[k]);
  }
  write_tensor_file(path, tensors);
  write_manifest(manifest_path(path), manifest);
}

GaussianStats load_gaussian_stats(const std::filesystem::path& path) {
  const Manifest manifest = read_manifest(manifest_path(path));
  const auto kind = manifest.find("kind");
  if (kind == manifest.end() || kind->second != "gaussian_stats") {
    throw DataError(fmt::format("'{}' is not a Gaussian statistics file", path.string()));
  }
  const auto tensors = read_tensor_file(path);
  GaussianStats stats;
  stats.jitter = std::stod(manifest.at("jitter"));
  const auto to_matrix = [](const NamedTensor& t) {
    net::Matrix m(t.rows, t.cols);
    std::copy(t.values.begin(), t.values.end(), m.values().begin());
    return m;
  };
  for (std::size_t i = 0; i + 2 < tensors.size(); i += 3) {
    const NamedTensor& mean = tensors[i];
    constexpr std::string_view kSuffix = ".mean";
    if (!mean.name.starts_with("class.") || !mean.name.ends_with(kSuffix)) {
      throw DataError(fmt::format("'{}': unexpected tensor '{}'", path.string(), mean.name));
    }
    ClassGaussian g;
    g.label = mean.name.substr(6, mean.name.size() - 6 - kSuffix.size());
    g.mean = mean.values;
    g.covariance = to_matrix(tensors[i + 1]);
    g.precision = to_matrix(tensors[i + 2]);
    const auto count = manifest.find("class." + g.label + ".count");
    g.count = count == manifest.end() ? 0 : std::stoul(count->second);
    if (g.covariance.rows() != g.mean.size() || g.precision.rows() != g.mean.size()) {
      throw DataError(fmt::format("'{}': class '{}' has inconsistent shapes", path.string(),
                                  g.label));
    }
    stats.classes.push_back(std::move(g));
  }
  if (stats.classes.empty() || tensors.size() != 3 * stats.classes.size()) {
    throw DataError(fmt::format("'{}': malformed Gaussian statistics", path.string()));
  }
  return stats;
}

ConfidenceScore branch_confidence(std::span<const double> h, const cm::BranchParams* branch) {
  if (branch == nullptr) throw UsageError("branch confidence needs a model with a branch");
  const auto fwd = net::forward(branch->layers, h);
  return {net::sigmoid(fwd.output()[0]), Estimator::kBranch};
}

SupervisedEstimator SupervisedEstimator::train(std::span<const Sample> samples,
                                               const cm::TrainConfig& config,
                                               std::uint64_t seed) {
  std::vector<cm::Example> examples;
  examples.reserve(samples.size());
  bool any_known = false;
  bool any_unknown = false;
  for (const auto& s : samples) {
    any_known |= s.known;
    any_unknown |= !s.known;
    examples.push_back({s.x, s.known ? 0 : 1, true});
  }
  if (!any_known || !any_unknown) {
    throw DataError("supervised estimator needs both known and unknown training trials");
  }
  cm::TrainConfig cfg = config;
  cfg.loss = cm::LossKind::kCrossEntropy;
  cfg.model.head = cm::HeadKind::kPlain;
  auto trained = cm::train(cfg, examples, seed);
  SupervisedEstimator estimator(std::move(trained.model));
  estimator.log_ = std::move(trained.log);
  return estimator;
}

ConfidenceScore SupervisedEstimator::score(std::span<const double> x) const {
  const auto scored = model_.score(x);
  return {cm::softmax(scored.logits.values)[0], Estimator::kSupervised};
}

}  // namespace cmconf::confidence
