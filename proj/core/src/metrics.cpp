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

#include "cmconf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "cmconf/errors.hpp"

namespace cmconf::metrics {
namespace {

void require_both(std::span<const double> positives, std::span<const double> negatives,
                  const char* what) {
  if (positives.empty() || negatives.empty()) {
    throw DataError(fmt::format("{}: needs both positive and negative trials ({} / {})", what,
                                positives.size(), negatives.size()));
  }
}

// Scores with labels, sorted by descending score.
std::vector<std::pair<double, bool>> merged_descending(std::span<const double> positives,
                                                       std::span<const double> negatives) {
  std::vector<std::pair<double, bool>> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.emplace_back(s, true);
  for (double s : negatives) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  return all;
}

// Walks distinct thresholds from the highest score down; fn(tp, fp, score)
// is called once per tie group after the group has been accepted.
template <typename Fn>
void sweep(const std::vector<std::pair<double, bool>>& sorted, Fn&& fn) {
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double score = sorted[i].first;
    for (; i < sorted.size() && sorted[i].first == score; ++i) {
      (sorted[i].second ? tp : fp) += 1;
    }
    fn(tp, fp, score);
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void split_cm(std::span<const ScoreRecord> records, std::vector<double>& bonafide,
              std::vector<double>& spoof) {
  for (const auto& r : records) {
    (r.trial_class == TrialClass::kBonafide ? bonafide : spoof).push_back(r.cm_score);
  }
}

void split_known(std::span<const ScoreRecord> records, std::vector<double>& known,
                 std::vector<double>& unknown) {
  for (const auto& r : records) (r.known ? known : unknown).push_back(r.confidence);
}

}  // namespace

EerResult eer(std::span<const double> positives, std::span<const double> negatives) {
  require_both(positives, negatives, "eer");
  const auto sorted = merged_descending(positives, negatives);
  const double n_pos = static_cast<double>(positives.size());
  const double n_neg = static_cast<double>(negatives.size());
  double prev_fpr = 0.0;
  double prev_fnr = 1.0;
  EerResult result{0.5, sorted.front().first};
  bool found = false;
  sweep(sorted, [&](std::size_t tp, std::size_t fp, double score) {
    if (found) return;
    const double fpr = static_cast<double>(fp) / n_neg;
    const double fnr = 1.0 - static_cast<double>(tp) / n_pos;
    const double gap = fnr - fpr;
    if (gap <= 0.0) {
      const double prev_gap = prev_fnr - prev_fpr;
      const double alpha = prev_gap / (prev_gap - gap);
      result.eer = prev_fpr + alpha * (fpr - prev_fpr);
      result.threshold = score;
      found = true;
    }
    prev_fpr = fpr;
    prev_fnr = fnr;
  });
  return result;
}

EerResult eer(std::span<const ScoreRecord> records) {
  std::vector<double> bonafide, spoof;
  split_cm(records, bonafide, spoof);
  return eer(bonafide, spoof);
}

double cllr(std::span<const double> positives, std::span<const double> negatives) {
  require_both(positives, negatives, "cllr");
  double pos = 0.0;
  for (double s : positives) pos += softplus(-s);
  double neg = 0.0;
  for (double s : negatives) neg += softplus(s);
  pos /= static_cast<double>(positives.size());
  neg /= static_cast<double>(negatives.size());
  return 0.5 * (pos + neg) / M_LN2;
}

double cllr(std::span<const ScoreRecord> records) {
  std::vector<double> bonafide, spoof;
  split_cm(records, bonafide, spoof);
  return cllr(bonafide, spoof);
}

double auroc(std::span<const double> positives, std::span<const double> negatives) {
  require_both(positives, negatives, "auroc");
  auto sorted = merged_descending(positives, negatives);
  std::reverse(sorted.begin(), sorted.end());
  // Mid-ranks (1-based) of the positives, in ascending score order.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    for (; j < sorted.size() && sorted[j].first == sorted[i].first; ++j) {
      pos_in_group += sorted[j].second ? 1 : 0;
    }
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += mid_rank * static_cast<double>(pos_in_group);
    i = j;
  }
  const double n_pos = static_cast<double>(positives.size());
  const double n_neg = static_cast<double>(negatives.size());
  const double u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double auroc_trapezoid(std::span<const double> positives, std::span<const double> negatives) {
  require_both(positives, negatives, "auroc");
  const auto sorted = merged_descending(positives, negatives);
  const double n_pos = static_cast<double>(positives.size());
  const double n_neg = static_cast<double>(negatives.size());
  double area = 0.0;
  double prev_tpr = 0.0;
  double prev_fpr = 0.0;
  sweep(sorted, [&](std::size_t tp, std::size_t fp, double) {
    const double tpr = static_cast<double>(tp) / n_pos;
    const double fpr = static_cast<double>(fp) / n_neg;
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
  });
  return area;
}

double aupr(std::span<const double> positives, std::span<const double> negatives) {
  require_both(positives, negatives, "aupr");
  const auto sorted = merged_descending(positives, negatives);
  const double n_pos = static_cast<double>(positives.size());
  double area = 0.0;
  double prev_recall = 0.0;
  sweep(sorted, [&](std::size_t tp, std::size_t fp, double) {
    const double recall = static_cast<double>(tp) / n_pos;
    if (recall > prev_recall) {
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      area += (recall - prev_recall) * precision;
      prev_recall = recall;
    }
  });
  return area;
}

TprOperatingPoint fpr_at_tpr(std::span<const double> positives,
                             std::span<const double> negatives, double target_tpr) {
  require_both(positives, negatives, "fpr_at_tpr");
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) {
    throw UsageError(fmt::format("target TPR {} is outside (0, 1]", target_tpr));
  }
  std::vector<double> pos(positives.begin(), positives.end());
  std::sort(pos.begin(), pos.end(), std::greater<>());
  const std::size_t n_pos = pos.size();
  const auto tpr_of = [n_pos](std::size_t k) {
    return static_cast<double>(k) / static_cast<double>(n_pos);
  };
  // Smallest count k of accepted positives with k / n >= target.
  auto k = static_cast<std::size_t>(std::ceil(target_tpr * static_cast<double>(n_pos)));
  k = std::clamp<std::size_t>(k, 1, n_pos);
  while (k > 1 && tpr_of(k - 1) >= target_tpr) --k;
  while (k < n_pos && tpr_of(k) < target_tpr) ++k;

  TprOperatingPoint op;
  op.threshold = pos[k - 1];
  op.low_resolution = n_pos < 20;
  const auto accepted_pos = static_cast<std::size_t>(
      std::count_if(pos.begin(), pos.end(), [&](double s) { return s >= op.threshold; }));
  const auto accepted_neg = static_cast<std::size_t>(std::count_if(
      negatives.begin(), negatives.end(), [&](double s) { return s >= op.threshold; }));
  op.tpr = tpr_of(accepted_pos);
  op.fpr = static_cast<double>(accepted_neg) / static_cast<double>(negatives.size());
  return op;
}

SelectiveEer selective_eer(std::span<const ScoreRecord> records, double theta) {
  std::vector<double> bonafide, spoof;
  std::size_t total_bonafide = 0;
  std::size_t total_spoof = 0;
  for (const auto& r : records) {
    const bool bona = r.trial_class == TrialClass::kBonafide;
    (bona ? total_bonafide : total_spoof) += 1;
    if (r.confidence > theta) (bona ? bonafide : spoof).push_back(r.cm_score);
  }
  SelectiveEer out;
  out.retained = bonafide.size() + spoof.size();
  const auto frac = [](std::size_t kept, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(kept) / static_cast<double>(total);
  };
  out.retained_fraction = frac(out.retained, records.size());
  out.retained_bonafide = frac(bonafide.size(), total_bonafide);
  out.retained_spoof = frac(spoof.size(), total_spoof);
  if (!bonafide.empty() && !spoof.empty()) out.eer = eer(bonafide, spoof).eer;
  return out;
}

CellCounts count_cells(std::span<const ScoreRecord> records) {
  CellCounts c;
  for (const auto& r : records) {
    const bool bona = r.trial_class == TrialClass::kBonafide;
    if (r.known) {
      (bona ? c.known_bonafide : c.known_spoof) += 1;
    } else {
      (bona ? c.unknown_bonafide : c.unknown_spoof) += 1;
    }
  }
  return c;
}

EvalReport evaluate(std::span<const ScoreRecord> records, double target_tpr) {
  EvalReport report;
  report.counts = count_cells(records);
  report.cllr = cllr(records);
  report.eer = eer(records).eer;

  std::vector<double> known, unknown;
  split_known(records, known, unknown);
  report.auroc = auroc(known, unknown);
  report.aupr = aupr(known, unknown);
  const TprOperatingPoint op = fpr_at_tpr(known, unknown, target_tpr);
  report.theta_c = op.threshold;
  report.tpr_at_theta = op.tpr;
  report.low_resolution = op.low_resolution;

  const SelectiveEer selective = selective_eer(records, op.threshold);
  report.retained_fraction = selective.retained_fraction;
  if (selective.eer) {
    report.eer_at_tpr = selective.eer;
    report.fpr_at_tpr = op.fpr;
  }
  return report;
}

EvalReport average(std::span<const EvalReport> reports) {
  if (reports.empty()) throw UsageError("average: no reports");
  const double n = static_cast<double>(reports.size());
  EvalReport out;
  out.counts = reports.front().counts;
  bool at_defined = true;
  double eer_at = 0.0;
  double fpr_at = 0.0;
  for (const auto& r : reports) {
    out.cllr += r.cllr / n;
    out.eer += r.eer / n;
    out.auroc += r.auroc / n;
    out.aupr += r.aupr / n;
    out.theta_c += r.theta_c / n;
    out.tpr_at_theta += r.tpr_at_theta / n;
    out.retained_fraction += r.retained_fraction / n;
    out.low_resolution = out.low_resolution || r.low_resolution;
    if (r.eer_at_tpr && r.fpr_at_tpr) {
      eer_at += *r.eer_at_tpr / n;
      fpr_at += *r.fpr_at_tpr / n;
    } else {
      at_defined = false;
    }
  }
  if (at_defined) {
    out.eer_at_tpr = eer_at;
    out.fpr_at_tpr = fpr_at;
  }
  return out;
}

}  // namespace cmconf::metrics
