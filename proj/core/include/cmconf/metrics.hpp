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

#ifndef CMCONF_METRICS_HPP_
#define CMCONF_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cmconf::metrics {

enum class TrialClass { kBonafide, kSpoof };

// One scored trial. attack_tag is empty for bona fide trials.
struct ScoreRecord {
  std::string trial_id;
  double cm_score = 0.0;
  double confidence = 0.0;
  TrialClass trial_class = TrialClass::kBonafide;
  bool known = true;
  std::string attack_tag;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

// All binary metrics take the scores of the positive and the negative class
// and throw DataError when either is empty. A trial is accepted as positive
// when its score is >= the threshold.

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Equal error rate, linearly interpolated between the two adjacent operating
// points where FNR - FPR changes sign. Tied scores form one operating point.
EerResult eer(std::span<const double> positives, std::span<const double> negatives);

// CM EER with bona fide as the positive class, on cm_score.
EerResult eer(std::span<const ScoreRecord> records);

// Log-likelihood-ratio cost in bits; scores are natural-log LLRs.
double cllr(std::span<const double> positives, std::span<const double> negatives);
double cllr(std::span<const ScoreRecord> records);

// Mann-Whitney statistic P(pos > neg) + P(pos == neg) / 2 via mid-ranks.
double auroc(std::span<const double> positives, std::span<const double> negatives);
// Trapezoidal area under the ROC curve; equals auroc() exactly up to rounding.
double auroc_trapezoid(std::span<const double> positives, std::span<const double> negatives);

// Area under the precision-recall curve with step-wise interpolation
// (average precision over distinct thresholds).
double aupr(std::span<const double> positives, std::span<const double> negatives);

struct TprOperatingPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  // Fewer than 20 positives: a 5% TPR step cannot be resolved.
  bool low_resolution = false;
};

// Largest threshold whose TPR (scores >= threshold) reaches target_tpr, and
// the FPR at that threshold.
TprOperatingPoint fpr_at_tpr(std::span<const double> positives,
                             std::span<const double> negatives, double target_tpr = 0.95);

struct SelectiveEer {
  std::optional<double> eer;  // undefined when a class has no retained trials
  std::size_t retained = 0;
  double retained_fraction = 0.0;
  double retained_bonafide = 0.0;  // fraction of bona fide trials kept
  double retained_spoof = 0.0;
};

// CM EER over trials whose confidence is strictly larger than theta.
SelectiveEer selective_eer(std::span<const ScoreRecord> records, double theta);

struct CellCounts {
  std::size_t known_bonafide = 0;
  std::size_t known_spoof = 0;
  std::size_t unknown_bonafide = 0;
  std::size_t unknown_spoof = 0;

  std::size_t total() const {
    return known_bonafide + known_spoof + unknown_bonafide + unknown_spoof;
  }
  friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

CellCounts count_cells(std::span<const ScoreRecord> records);

// Every metric of one score set. The two "at TPR" values are left empty when
// the selective EER is undefined, i.e. the threshold retains no usable set.
struct EvalReport {
  double cllr = 0.0;
  double eer = 0.0;
  std::optional<double> eer_at_tpr;
  std::optional<double> fpr_at_tpr;
  double auroc = 0.0;
  double aupr = 0.0;
  double theta_c = 0.0;
  double tpr_at_theta = 0.0;
  double retained_fraction = 0.0;
  bool low_resolution = false;
  CellCounts counts;
};

// Known trials are the positive class for the confidence metrics. Needs both
// CM classes and both known and unknown trials.
EvalReport evaluate(std::span<const ScoreRecord> records, double target_tpr = 0.95);

// Metric-wise mean; optional cells stay defined only if defined everywhere.
EvalReport average(std::span<const EvalReport> reports);

}  // namespace cmconf::metrics

#endif  // CMCONF_METRICS_HPP_
