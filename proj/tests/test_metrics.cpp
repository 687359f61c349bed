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

#include <gtest/gtest.h>

#include <cmath>

#include "cmconf/errors.hpp"
#include "cmconf/metrics.hpp"
#include "cmconf/rng.hpp"
#include "oracles.hpp"

namespace cmconf::metrics {
namespace {

using testing::random_scores;

const std::vector<double> kEmpty;

// ---------------------------------------------------------------- EER

TEST(Eer, PerfectSeparation) {
  const std::vector<double> pos = {3, 4, 5}, neg = {-1, 0, 1};
  EXPECT_EQ(eer(pos, neg).eer, 0.0);
}

TEST(Eer, HandWorkedFourPoints) {
  const std::vector<double> pos = {1.0, 3.0}, neg = {2.0, 4.0};
  EXPECT_DOUBLE_EQ(eer(pos, neg).eer, 0.5);
}

TEST(Eer, FullyReversed) {
  const std::vector<double> pos = {-3, -2}, neg = {2, 3};
  EXPECT_DOUBLE_EQ(eer(pos, neg).eer, 1.0);
}

TEST(Eer, IndependentLabelsGiveHalf) {
  Rng rng(1);
  std::vector<double> pos, neg;
  for (int i = 0; i < 2000; ++i) (rng.uniform() < 0.5 ? pos : neg).push_back(rng.normal());
  EXPECT_NEAR(eer(pos, neg).eer, 0.5, 0.03);
}

TEST(Eer, TiesFormOneOperatingPoint) {
  // All scores tied: the only operating points are (0,1) and (1,0).
  const std::vector<double> pos(5, 1.0), neg(7, 1.0);
  EXPECT_DOUBLE_EQ(eer(pos, neg).eer, 0.5);
}

TEST(Eer, InvariantUnderIncreasingTransforms) {
  Rng rng(2);
  for (int set = 0; set < 10; ++set) {
    const auto pos = random_scores(rng, 50 + rng.below(200), 1.0, set % 2 == 0);
    const auto neg = random_scores(rng, 50 + rng.below(200), 0.0, set % 2 == 0);
    const double base = eer(pos, neg).eer;
    for (const auto& f : testing::increasing_transforms()) {
      std::vector<double> p2, n2;
      for (double s : pos) p2.push_back(f(s));
      for (double s : neg) n2.push_back(f(s));
      EXPECT_EQ(eer(p2, n2).eer, base);
    }
  }
}

TEST(Eer, SingleClassThrows) {
  const std::vector<double> s = {1.0, 2.0};
  EXPECT_THROW(eer(s, kEmpty), DataError);
  EXPECT_THROW(eer(kEmpty, s), DataError);
}

// ---------------------------------------------------------------- Cllr

TEST(Cllr, ZeroScoresGiveOne) {
  const std::vector<double> zeros(17, 0.0), zeros2(5, 0.0);
  EXPECT_NEAR(cllr(zeros, zeros2), 1.0, 1e-15);
}

TEST(Cllr, PerfectCalibratedSeparation) {
  const std::vector<double> pos(10, 40.0), neg(10, -40.0);
  EXPECT_LT(cllr(pos, neg), 1e-10);
  EXPECT_GE(cllr(pos, neg), 0.0);
}

TEST(Cllr, MatchesDirectSummation) {
  Rng rng(3);
  for (int set = 0; set < 20; ++set) {
    const auto pos = random_scores(rng, 5 + rng.below(30), 1.0, false);
    const auto neg = random_scores(rng, 5 + rng.below(30), -1.0, false);
    // Reverse order, naive formula.
    long double a = 0.0L, b = 0.0L;
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) a += std::log2(1.0L + std::exp(-*it));
    for (auto it = neg.rbegin(); it != neg.rend(); ++it) b += std::log2(1.0L + std::exp(*it));
    const double want = static_cast<double>(0.5L * (a / pos.size() + b / neg.size()));
    EXPECT_NEAR(cllr(pos, neg), want, 1e-12);
  }
}

TEST(Cllr, NeverNegativeAndStable) {
  Rng rng(4);
  for (int set = 0; set < 50; ++set) {
    const auto pos = random_scores(rng, 20, rng.uniform(-50, 50), false);
    const auto neg = random_scores(rng, 20, rng.uniform(-50, 50), false);
    const double c = cllr(pos, neg);
    EXPECT_GE(c, 0.0);
    EXPECT_TRUE(std::isfinite(c));
  }
  const std::vector<double> huge = {1000.0}, tiny = {1000.0};
  EXPECT_NEAR(cllr(huge, tiny), 0.5 * 1000.0 / std::log(2.0), 1e-9);
}

TEST(Cllr, SingleClassThrows) {
  const std::vector<double> s = {1.0};
  EXPECT_THROW(cllr(s, kEmpty), DataError);
}

// ---------------------------------------------------------------- AUROC

TEST(Auroc, PerfectSeparationAndAllTies) {
  const std::vector<double> pos = {2, 3}, neg = {0, 1};
  EXPECT_EQ(auroc(pos, neg), 1.0);
  EXPECT_EQ(auroc(neg, pos), 0.0);
  const std::vector<double> same(6, 0.3), same2(4, 0.3);
  EXPECT_EQ(auroc(same, same2), 0.5);
}

TEST(Auroc, MatchesPairwiseOracle) {
  Rng rng(5);
  for (int set = 0; set < 100; ++set) {
    const std::size_t n_pos = 1 + rng.below(250), n_neg = 1 + rng.below(250);
    const bool ties = set % 3 == 0;
    const auto pos = random_scores(rng, n_pos, rng.uniform(-1, 2), ties);
    const auto neg = random_scores(rng, n_neg, 0.0, ties);
    const double want = testing::pairwise_auroc(pos, neg);
    EXPECT_NEAR(auroc(pos, neg), want, 1e-12);
    EXPECT_NEAR(auroc_trapezoid(pos, neg), want, 1e-12);
  }
}

TEST(Auroc, FiftyFiftyRandom) {
  Rng rng(6);
  const auto pos = random_scores(rng, 50, 0.5, false);
  const auto neg = random_scores(rng, 50, 0.0, false);
  EXPECT_NEAR(auroc(pos, neg), testing::pairwise_auroc(pos, neg), 1e-12);
}

TEST(Auroc, SingleClassThrows) {
  const std::vector<double> s = {1.0};
  EXPECT_THROW(auroc(s, kEmpty), DataError);
  EXPECT_THROW(aupr(kEmpty, s), DataError);
}

// ---------------------------------------------------------------- AUPR

TEST(Aupr, PerfectSeparation) {
  const std::vector<double> pos = {5, 6, 7}, neg = {1, 2};
  EXPECT_DOUBLE_EQ(aupr(pos, neg), 1.0);
}

TEST(Aupr, SinglePositiveRankedFirst) {
  const std::vector<double> pos = {9.0}, neg = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(aupr(pos, neg), 1.0);
}

TEST(Aupr, StepInterpolationByHand) {
  // Ranking: P N P N -> recall steps at precision 1 and 2/3.
  const std::vector<double> pos = {4.0, 2.0}, neg = {3.0, 1.0};
  EXPECT_NEAR(aupr(pos, neg), 0.5 * 1.0 + 0.5 * (2.0 / 3.0), 1e-15);
}

TEST(Aupr, RandomScoresGivePrevalence) {
  Rng rng(7);
  std::vector<double> pos, neg;
  for (int i = 0; i < 20000; ++i) (rng.uniform() < 0.3 ? pos : neg).push_back(rng.normal());
  EXPECT_NEAR(aupr(pos, neg), 0.3, 0.05);
}

// ---------------------------------------------------------------- FPR at TPR

TEST(FprAtTpr, PerfectSeparation) {
  std::vector<double> pos, neg;
  for (int i = 0; i < 40; ++i) {
    pos.push_back(10.0 + i);
    neg.push_back(-10.0 - i);
  }
  const auto op = fpr_at_tpr(pos, neg);
  EXPECT_EQ(op.fpr, 0.0);
  EXPECT_GE(op.tpr, 0.95);
  EXPECT_FALSE(op.low_resolution);
}

TEST(FprAtTpr, IdenticalDistributions) {
  Rng rng(8);
  const auto pos = random_scores(rng, 20000, 0.0, false);
  const auto neg = random_scores(rng, 20000, 0.0, false);
  EXPECT_NEAR(fpr_at_tpr(pos, neg).fpr, 0.95, 0.03);
}

TEST(FprAtTpr, TwentyPositivesExactly19Pass) {
  std::vector<double> pos;
  for (int i = 0; i < 20; ++i) pos.push_back(static_cast<double>(i));
  const std::vector<double> neg = {-5.0, 0.5, 0.9, 3.5, 25.0};
  const auto op = fpr_at_tpr(pos, neg);
  EXPECT_EQ(op.threshold, 1.0);
  EXPECT_DOUBLE_EQ(op.tpr, 0.95);
  EXPECT_DOUBLE_EQ(op.fpr, 2.0 / 5.0);
  EXPECT_EQ(op.threshold, testing::max_threshold_by_sweep(pos, neg, 0.95));
}

TEST(FprAtTpr, MaximalThresholdBySweep) {
  Rng rng(9);
  for (int set = 0; set < 200; ++set) {
    const std::size_t n_pos = 1 + rng.below(120), n_neg = 1 + rng.below(80);
    const bool ties = set % 2 == 0;
    const auto pos = random_scores(rng, n_pos, 1.0, ties);
    const auto neg = random_scores(rng, n_neg, 0.0, ties);
    const double target = set % 5 == 0 ? rng.uniform(0.05, 1.0) : 0.95;
    const auto op = fpr_at_tpr(pos, neg, target);
    EXPECT_EQ(op.threshold, testing::max_threshold_by_sweep(pos, neg, target));
    EXPECT_GE(testing::rate_at_or_above(pos, op.threshold), target);
    EXPECT_DOUBLE_EQ(op.tpr, testing::rate_at_or_above(pos, op.threshold));
    EXPECT_DOUBLE_EQ(op.fpr, testing::rate_at_or_above(neg, op.threshold));
    // Every larger observed score falls short of the target.
    for (double t : pos) {
      if (t > op.threshold) EXPECT_LT(testing::rate_at_or_above(pos, t), target);
    }
    EXPECT_EQ(op.low_resolution, n_pos < 20);
  }
}

TEST(FprAtTpr, LowResolutionFlag) {
  const std::vector<double> pos = {1, 2, 3}, neg = {0};
  EXPECT_TRUE(fpr_at_tpr(pos, neg).low_resolution);
}

TEST(FprAtTpr, BadTargetThrows) {
  const std::vector<double> pos = {1}, neg = {0};
  EXPECT_THROW(fpr_at_tpr(pos, neg, 0.0), UsageError);
  EXPECT_THROW(fpr_at_tpr(pos, neg, 1.5), UsageError);
}

// ---------------------------------------------------------------- selective EER

ScoreRecord rec(double s, double c, bool bona, bool known = true) {
  ScoreRecord r;
  r.trial_id = "t";
  r.cm_score = s;
  r.confidence = c;
  r.trial_class = bona ? TrialClass::kBonafide : TrialClass::kSpoof;
  r.known = known;
  r.attack_tag = bona ? "" : "A01";
  return r;
}

std::vector<ScoreRecord> mixed_records(Rng& rng, std::size_t n) {
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool bona = rng.uniform() < 0.4;
    const bool known = rng.uniform() < 0.7;
    out.push_back(rec(rng.normal() + (bona ? 1.0 : -1.0), rng.normal() + (known ? 1.0 : 0.0),
                      bona, known));
    out.back().trial_id = "t" + std::to_string(i);
  }
  return out;
}

TEST(SelectiveEer, LowThresholdIsNoOp) {
  Rng rng(10);
  const auto records = mixed_records(rng, 300);
  const auto sel = selective_eer(records, -1e9);
  ASSERT_TRUE(sel.eer.has_value());
  EXPECT_EQ(*sel.eer, eer(records).eer);
  EXPECT_EQ(sel.retained_fraction, 1.0);
}

TEST(SelectiveEer, HighThresholdIsUndefined) {
  Rng rng(11);
  const auto records = mixed_records(rng, 100);
  const auto sel = selective_eer(records, 1e9);
  EXPECT_FALSE(sel.eer.has_value());
  EXPECT_EQ(sel.retained_fraction, 0.0);
  EXPECT_EQ(sel.retained, 0u);
}

TEST(SelectiveEer, StrictInequality) {
  const std::vector<ScoreRecord> records = {rec(1.0, 0.5, true), rec(-1.0, 0.5, false),
                                            rec(2.0, 0.9, true), rec(-2.0, 0.9, false)};
  const auto sel = selective_eer(records, 0.5);
  EXPECT_EQ(sel.retained, 2u);
  EXPECT_DOUBLE_EQ(sel.retained_bonafide, 0.5);
  EXPECT_DOUBLE_EQ(sel.retained_spoof, 0.5);
}

TEST(SelectiveEer, AbstainingOnErrorsRemovesThem) {
  std::vector<ScoreRecord> records;
  for (int i = 0; i < 20; ++i) {
    records.push_back(rec(2.0 + i * 0.1, 0.9, true));
    records.push_back(rec(-2.0 - i * 0.1, 0.9, false));
  }
  // Misclassified trials carry the lowest confidences.
  records.push_back(rec(-3.0, 0.1, true));
  records.push_back(rec(3.0, 0.2, false));
  EXPECT_GT(eer(records).eer, 0.0);
  const auto sel = selective_eer(records, 0.5);
  ASSERT_TRUE(sel.eer.has_value());
  EXPECT_EQ(*sel.eer, 0.0);
}

// ---------------------------------------------------------------- evaluate

TEST(Evaluate, CountsAndRanges) {
  Rng rng(12);
  const auto records = mixed_records(rng, 500);
  const auto report = evaluate(records);
  const auto counts = count_cells(records);
  EXPECT_EQ(report.counts, counts);
  EXPECT_EQ(counts.total(), records.size());
  for (double v : {report.eer, report.auroc, report.aupr, report.retained_fraction,
                   report.tpr_at_theta}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  ASSERT_TRUE(report.fpr_at_tpr.has_value());
  EXPECT_GE(report.tpr_at_theta, 0.95);
}

TEST(Evaluate, PermutationInvariant) {
  Rng rng(13);
  auto records = mixed_records(rng, 400);
  const auto a = evaluate(records);
  for (int t = 0; t < 5; ++t) {
    shuffle(records.begin(), records.end(), rng);
    const auto b = evaluate(records);
    EXPECT_EQ(a.eer, b.eer);
    EXPECT_NEAR(a.cllr, b.cllr, 1e-14);
    EXPECT_EQ(a.auroc, b.auroc);
    EXPECT_EQ(a.aupr, b.aupr);
    EXPECT_EQ(a.theta_c, b.theta_c);
    EXPECT_EQ(a.eer_at_tpr, b.eer_at_tpr);
    EXPECT_EQ(a.fpr_at_tpr, b.fpr_at_tpr);
  }
}

TEST(Evaluate, UndefinedSelectiveCellsPropagate) {
  // Every retained trial is spoof: the selective EER is undefined.
  std::vector<ScoreRecord> records;
  for (int i = 0; i < 30; ++i) {
    records.push_back(rec(-1.0 - i, 0.9, false, true));
    records.push_back(rec(1.0 + i, 0.1, true, false));
  }
  const auto report = evaluate(records);
  EXPECT_FALSE(report.eer_at_tpr.has_value());
  EXPECT_FALSE(report.fpr_at_tpr.has_value());
  Rng rng(1);
  const EvalReport with[] = {report, evaluate(mixed_records(rng, 50))};
  const auto avg = average(with);
  EXPECT_FALSE(avg.eer_at_tpr.has_value());
}

TEST(Evaluate, AverageIsMeanOfMetrics) {
  Rng rng(14);
  const EvalReport reports[] = {evaluate(mixed_records(rng, 300)),
                                evaluate(mixed_records(rng, 300)),
                                evaluate(mixed_records(rng, 300))};
  const auto avg = average(reports);
  EXPECT_NEAR(avg.eer, (reports[0].eer + reports[1].eer + reports[2].eer) / 3.0, 1e-15);
  EXPECT_NEAR(avg.auroc, (reports[0].auroc + reports[1].auroc + reports[2].auroc) / 3.0, 1e-15);
  ASSERT_TRUE(avg.fpr_at_tpr.has_value());
  EXPECT_NEAR(*avg.fpr_at_tpr,
              (*reports[0].fpr_at_tpr + *reports[1].fpr_at_tpr + *reports[2].fpr_at_tpr) / 3.0,
              1e-15);
  EXPECT_THROW(average(std::span<const EvalReport>{}), UsageError);
}

}  // namespace
}  // namespace cmconf::metrics
