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

#ifndef CMCONF_EXPERIMENT_HPP_
#define CMCONF_EXPERIMENT_HPP_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmconf/cm.hpp"
#include "cmconf/confidence.hpp"
#include "cmconf/config.hpp"
#include "cmconf/metrics.hpp"
#include "cmconf/protocol.hpp"
#include "cmconf/score_io.hpp"

namespace cmconf::experiment {

// A set reduced to one pooled feature vector per trial.
struct PooledSet {
  std::string name;
  std::vector<protocol::Trial> trials;
  std::vector<std::vector<double>> features;
};

// Synthesizes and pools every trial of `set` without keeping the audio.
PooledSet pool_generated(const protocol::GeneratorSpec& spec, const protocol::SetConfig& set,
                         const features::LfccConfig& lfcc, int jobs);

// Reads the audio named by each trial's source, relative to `base_dir`.
PooledSet pool_trial_list(std::string name, std::vector<protocol::Trial> trials,
                          const std::filesystem::path& base_dir,
                          const features::LfccConfig& lfcc, int jobs);

// The train (is_train) or test set of the config's protocol: from a trial list
// when given, otherwise synthesized from the config's generator preset.
PooledSet load_set(const RunConfig& config, bool is_train,
                   const std::optional<std::filesystem::path>& trial_list);

std::vector<cm::Example> cm_examples(const PooledSet& set);

// The CM training config implied by a run config.
cm::TrainConfig cm_train_config(const RunConfig& config);

// Known/unknown classifier on every trial of a train set with unknown trials.
confidence::SupervisedEstimator train_supervised(const RunConfig& config, const PooledSet& train,
                                                 std::uint64_t seed);

// Gaussians of the CM embeddings of the known training trials, one per
// attack tag plus bona fide, or bona fide / spoof when per_attack is false.
confidence::GaussianStats fit_gaussians(const cm::CmModel& model, const PooledSet& train,
                                        bool per_attack, double jitter, int jobs);

struct Scorers {
  const cm::CmModel* model = nullptr;
  const confidence::GaussianStats* gaussians = nullptr;
  const confidence::SupervisedEstimator* supervised = nullptr;
};

// One record per trial. Throws UsageError when the estimator needs something
// `scorers` does not provide (a branch, fitted Gaussians, a supervised model).
std::vector<metrics::ScoreRecord> score_set(const PooledSet& set, confidence::Estimator estimator,
                                            const Scorers& scorers, int jobs);

// Identifies one report row.
struct ReportKey {
  std::string train_set;
  std::string test_set;
  std::string head;
  std::string loss;
  std::string estimator;

  friend auto operator<=>(const ReportKey&, const ReportKey&) = default;
};

struct ReportRow {
  ReportKey key;
  std::size_t seeds = 0;
  metrics::EvalReport report;
};

// Score files are grouped by their header's key fields; each group is
// evaluated per file and averaged. Throws DataError on an empty score file or
// a header without the key fields.
std::vector<ReportRow> evaluate_score_files(std::span<const protocol::ScoreFile> files,
                                            double target_tpr);

std::string report_csv(std::span<const ReportRow> rows);
std::vector<ReportRow> parse_report_csv(std::string_view text);
// Fixed-width table, EER and FPR in percent, "-" for undefined cells.
std::string report_table(std::span<const ReportRow> rows);

// trial_id,s,c,class,known,attack_tag
std::string plot_csv(const protocol::ScoreFile& file);

// Output layout under a run directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.ini"; }
  std::filesystem::path data(std::string_view set) const { return root / "data" / set; }
  std::filesystem::path seed_dir(std::uint64_t seed) const;
  std::filesystem::path model(std::uint64_t seed) const { return seed_dir(seed) / "cm.tensors"; }
  std::filesystem::path train_log(std::uint64_t seed) const { return seed_dir(seed) / "train_log.csv"; }
  std::filesystem::path gaussians(std::uint64_t seed) const { return seed_dir(seed) / "gaussians.tensors"; }
  std::filesystem::path supervised(std::uint64_t seed) const { return seed_dir(seed) / "supervised.tensors"; }
  std::filesystem::path scores(std::uint64_t seed, confidence::Estimator e) const;
  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path plot(const protocol::ScoreFile& file) const;
};

// Header fields identifying a score file.
protocol::ScoreFile make_score_file(const RunConfig& config, std::uint64_t seed,
                                    confidence::Estimator estimator,
                                    std::vector<metrics::ScoreRecord> records);

struct Progress {
  std::function<void(std::string_view)> log;
  void operator()(std::string_view message) const {
    if (log) log(message);
  }
};

// Trains one CM per seed (plus a supervised estimator when requested) and
// writes the model artifacts. Refuses to overwrite unless force is set.
void run_train(const RunConfig& config, bool force,
               const std::optional<std::filesystem::path>& train_list, const Progress& progress);

// Fits and saves Gaussians for every seed's model.
void run_fit_gaussians(const RunConfig& config, bool force,
                       const std::optional<std::filesystem::path>& train_list,
                       const Progress& progress);

// Scores the test set with every configured estimator for every seed. Missing
// Gaussians are fitted from the train set and noted in the score header.
std::vector<protocol::ScoreFile> run_score(const RunConfig& config, bool force,
                                           const std::optional<std::filesystem::path>& train_list,
                                           const std::optional<std::filesystem::path>& test_list,
                                           const Progress& progress);

// Evaluates score files and writes report.csv, report.txt and per-file plot
// data under `report_dir`.
std::vector<ReportRow> run_eval(std::span<const protocol::ScoreFile> files, double target_tpr,
                                const std::filesystem::path& report_dir, bool force);

// Whole pipeline in memory, nothing written.
struct PipelineResult {
  std::vector<protocol::ScoreFile> score_files;
  std::vector<ReportRow> rows;
};
PipelineResult run_in_memory(const RunConfig& config, const Progress& progress = {});

// Writes the synthesized train and test sets as WAV files plus trial lists.
void run_gen_data(const RunConfig& config, bool force, const Progress& progress);

}  // namespace cmconf::experiment

#endif  // CMCONF_EXPERIMENT_HPP_
