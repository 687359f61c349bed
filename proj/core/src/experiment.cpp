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

#include "cmconf/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "cmconf/errors.hpp"
#include "cmconf/parallel.hpp"
#include "cmconf/rng.hpp"
#include "cmconf/wav_io.hpp"

namespace cmconf::experiment {
namespace fs = std::filesystem;
using confidence::Estimator;

namespace {

constexpr std::string_view kSynthPrefix = "synth:";

void check_writable(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw UsageError(fmt::format("'{}' exists; pass --force to overwrite", path.string()));
  }
}

void write_text(const fs::path& path, std::string_view text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

std::string_view header_field(const protocol::ScoreFile& file, const std::string& key) {
  const auto it = file.header.find(key);
  if (it == file.header.end()) {
    throw DataError(fmt::format("score file header lacks '{}'", key));
  }
  return it->second;
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string("-");
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T csv_number(std::string_view text, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("report line {}: '{}' is not a number", line, text));
  }
  return v;
}

std::optional<double> csv_optional(std::string_view text, std::size_t line) {
  if (text == "-") return std::nullopt;
  return csv_number<double>(text, line);
}

constexpr std::string_view kReportColumns =
    "train_set,test_set,head,loss,estimator,seeds,eer,cllr,auroc,aupr,fpr_at_tpr,eer_at_tpr,"
    "theta_c,tpr_at_theta,retained_fraction,low_resolution,known_bonafide,known_spoof,"
    "unknown_bonafide,unknown_spoof";

std::string percent_cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.2f}", 100.0 * *v) : std::string("-");
}

}  // namespace

PooledSet pool_generated(const protocol::GeneratorSpec& spec, const protocol::SetConfig& set,
                         const features::LfccConfig& lfcc, int jobs) {
  for (const auto& cell : set.cells) {
    if (!spec.populations.contains(cell.population)) {
      throw DataError(fmt::format("set {}: population '{}' is not defined by preset '{}'",
                                  set.name, cell.population, spec.preset));
    }
  }
  PooledSet out{set.name, protocol::list_trials(set), {}};
  out.features.resize(out.trials.size());
  parallel_for(out.trials.size(), jobs, [&](std::size_t i) {
    const auto& t = out.trials[i];
    const std::string pop = t.source.substr(kSynthPrefix.size());
    const auto w = protocol::synthesize(spec.populations.at(pop), derive_seed(spec.seed, t.id),
                                        spec.sample_rate);
    out.features[i] = features::mean_pool(features::extract(w, lfcc));
  });
  return out;
}

PooledSet pool_trial_list(std::string name, std::vector<protocol::Trial> trials,
                          const fs::path& base_dir, const features::LfccConfig& lfcc, int jobs) {
  PooledSet out{std::move(name), std::move(trials), {}};
  out.features.resize(out.trials.size());
  parallel_for(out.trials.size(), jobs, [&](std::size_t i) {
    const fs::path source = out.trials[i].source;
    const auto w = features::read_audio(source.is_absolute() ? source : base_dir / source);
    out.features[i] = features::mean_pool(features::extract(w, lfcc));
  });
  return out;
}

PooledSet load_set(const RunConfig& config, bool is_train,
                   const std::optional<fs::path>& trial_list) {
  const auto pair = protocol::assemble(config.protocol, config.counts);
  const auto& set = is_train ? pair.train : pair.test;
  if (trial_list) {
    return pool_trial_list(set.name, protocol::read_trial_list(*trial_list),
                           trial_list->parent_path(), config.lfcc, config.jobs);
  }
  return pool_generated(protocol::make_generator_spec(config.preset, config.data_seed), set,
                        config.lfcc, config.jobs);
}

std::vector<cm::Example> cm_examples(const PooledSet& set) {
  std::vector<cm::Example> out;
  out.reserve(set.trials.size());
  for (std::size_t i = 0; i < set.trials.size(); ++i) {
    const auto& t = set.trials[i];
    out.push_back({set.features[i],
                   t.trial_class == metrics::TrialClass::kBonafide ? cm::kBonafide : cm::kSpoof,
                   t.known});
  }
  return out;
}

cm::TrainConfig cm_train_config(const RunConfig& config) {
  cm::TrainConfig t = config.train;
  t.model.head = config.head;
  t.loss = config.loss;
  t.model.input_dim = 3 * static_cast<std::size_t>(config.lfcc.n_ceps);
  return t;
}

confidence::SupervisedEstimator train_supervised(const RunConfig& config, const PooledSet& train,
                                                 std::uint64_t seed) {
  std::vector<confidence::SupervisedEstimator::Sample> samples;
  samples.reserve(train.trials.size());
  for (std::size_t i = 0; i < train.trials.size(); ++i) {
    samples.push_back({train.features[i], train.trials[i].known});
  }
  return confidence::SupervisedEstimator::train(samples, cm_train_config(config),
                                                derive_seed(seed, "supervised"));
}

confidence::GaussianStats fit_gaussians(const cm::CmModel& model, const PooledSet& train,
                                        bool per_attack, double jitter, int jobs) {
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < train.trials.size(); ++i) {
    if (train.trials[i].known) known.push_back(i);
  }
  std::vector<confidence::TaggedEmbedding> samples(known.size());
  parallel_for(known.size(), jobs, [&](std::size_t k) {
    const auto& t = train.trials[known[k]];
    std::string label;
    if (t.trial_class == metrics::TrialClass::kBonafide) {
      label = "bonafide";
    } else {
      label = per_attack && !t.attack_tag.empty() ? t.attack_tag : "spoof";
    }
    samples[k] = {model.embed(train.features[known[k]]), std::move(label)};
  });
  const std::vector<std::string> required = {"bonafide"};
  return confidence::fit_class_gaussians(samples, jitter, required);
}

std::vector<metrics::ScoreRecord> score_set(const PooledSet& set, Estimator estimator,
                                            const Scorers& scorers, int jobs) {
  if (scorers.model == nullptr) throw UsageError("scoring needs a CM model");
  if (estimator == Estimator::kBranch && !scorers.model->branch) {
    throw UsageError("estimator 'branch' needs a model trained with the branch loss");
  }
  if (estimator == Estimator::kMDist && scorers.gaussians == nullptr) {
    throw UsageError("estimator 'm_dist' needs fitted Gaussians");
  }
  if (estimator == Estimator::kSupervised && scorers.supervised == nullptr) {
    throw UsageError("estimator 'supervised' needs a trained supervised model");
  }
  if (set.features.empty()) throw DataError(fmt::format("set {} is empty", set.name));
  if (set.features.front().size() != scorers.model->input_dim()) {
    throw DataError(fmt::format("set {} has {}-dim features, model expects {}", set.name,
                                set.features.front().size(), scorers.model->input_dim()));
  }
  std::vector<metrics::ScoreRecord> out(set.trials.size());
  parallel_for(set.trials.size(), jobs, [&](std::size_t i) {
    const auto& t = set.trials[i];
    const auto scored = scorers.model->score(set.features[i]);
    double c = 0.0;
    switch (estimator) {
      case Estimator::kMaxProb:
        c = confidence::max_prob(scored.logits).value;
        break;
      case Estimator::kEnergy:
        c = confidence::energy(scored.logits).value;
        break;
      case Estimator::kMDist:
        c = confidence::m_dist(scored.embedding, *scorers.gaussians).value;
        break;
      case Estimator::kBranch:
        c = *scored.branch_confidence;
        break;
      case Estimator::kSupervised:
        c = scorers.supervised->score(set.features[i]).value;
        break;
    }
    out[i] = {t.id, cm::cm_score(scored.logits), c, t.trial_class, t.known, t.attack_tag};
  });
  return out;
}

std::vector<ReportRow> evaluate_score_files(std::span<const protocol::ScoreFile> files,
                                            double target_tpr) {
  std::map<ReportKey, std::vector<metrics::EvalReport>> groups;
  for (const auto& f : files) {
    if (f.records.empty()) throw DataError("score file has no records");
    ReportKey key{std::string(header_field(f, "train_set")),
                  std::string(header_field(f, "test_set")),
                  std::string(header_field(f, "head")), std::string(header_field(f, "loss")),
                  std::string(header_field(f, "estimator"))};
    groups[std::move(key)].push_back(metrics::evaluate(f.records, target_tpr));
  }
  std::vector<ReportRow> rows;
  for (const auto& [key, reports] : groups) {
    rows.push_back({key, reports.size(), metrics::average(reports)});
  }
  return rows;
}

std::string report_csv(std::span<const ReportRow> rows) {
  std::string out(kReportColumns);
  out += '\n';
  for (const auto& row : rows) {
    const auto& k = row.key;
    const auto& r = row.report;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       k.train_set, k.test_set, k.head, k.loss, k.estimator, row.seeds, r.eer,
                       r.cllr, r.auroc, r.aupr, optional_cell(r.fpr_at_tpr),
                       optional_cell(r.eer_at_tpr), r.theta_c, r.tpr_at_theta,
                       r.retained_fraction, r.low_resolution ? 1 : 0, r.counts.known_bonafide,
                       r.counts.known_spoof, r.counts.unknown_bonafide, r.counts.unknown_spoof);
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
  std::vector<ReportRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kReportColumns) throw DataError("report CSV: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 20) {
      throw DataError(fmt::format("report line {}: expected 20 fields, got {}", line_no,
                                  f.size()));
    }
    ReportRow row;
    row.key = {f[0], f[1], f[2], f[3], f[4]};
    row.seeds = csv_number<std::size_t>(f[5], line_no);
    auto& r = row.report;
    r.eer = csv_number<double>(f[6], line_no);
    r.cllr = csv_number<double>(f[7], line_no);
    r.auroc = csv_number<double>(f[8], line_no);
    r.aupr = csv_number<double>(f[9], line_no);
    r.fpr_at_tpr = csv_optional(f[10], line_no);
    r.eer_at_tpr = csv_optional(f[11], line_no);
    r.theta_c = csv_number<double>(f[12], line_no);
    r.tpr_at_theta = csv_number<double>(f[13], line_no);
    r.retained_fraction = csv_number<double>(f[14], line_no);
    r.low_resolution = csv_number<int>(f[15], line_no) != 0;
    r.counts.known_bonafide = csv_number<std::size_t>(f[16], line_no);
    r.counts.known_spoof = csv_number<std::size_t>(f[17], line_no);
    r.counts.unknown_bonafide = csv_number<std::size_t>(f[18], line_no);
    r.counts.unknown_spoof = csv_number<std::size_t>(f[19], line_no);
    rows.push_back(std::move(row));
  }
  if (line_no == 0) throw DataError("report CSV is empty");
  return rows;
}

std::string report_table(std::span<const ReportRow> rows) {
  std::string out = fmt::format("{:<6}{:<6}{:<7}{:<11}{:<11}|{:>8}{:>8} |{:>8}{:>8}{:>10}{:>10} |{:>6}\n",
                                "train", "test", "head", "loss", "estimator", "EER%", "Cllr",
                                "AUROC", "AUPR", "FPR@TPR%", "EER@TPR%", "seeds");
  out += std::string(out.size() - 1, '-') + '\n';
  for (const auto& row : rows) {
    const auto& k = row.key;
    const auto& r = row.report;
    out += fmt::format("{:<6}{:<6}{:<7}{:<11}{:<11}|{:>8.2f}{:>8.3f} |{:>8.3f}{:>8.3f}{:>10}{:>10} |{:>6}{}\n",
                       k.train_set, k.test_set, k.head, k.loss, k.estimator, 100.0 * r.eer,
                       r.cllr, r.auroc, r.aupr, percent_cell(r.fpr_at_tpr),
                       percent_cell(r.eer_at_tpr), row.seeds,
                       r.low_resolution ? "  (low resolution)" : "");
  }
  return out;
}

std::string plot_csv(const protocol::ScoreFile& file) {
  std::string out = "trial_id,s,c,class,known,attack_tag\n";
  for (const auto& r : file.records) {
    out += fmt::format("{},{},{},{},{},{}\n", r.trial_id, r.cm_score, r.confidence,
                       protocol::to_string(r.trial_class), r.known ? "known" : "unknown",
                       r.attack_tag);
  }
  return out;
}

fs::path Layout::seed_dir(std::uint64_t seed) const {
  return root / "models" / fmt::format("seed{}", seed);
}

fs::path Layout::scores(std::uint64_t seed, Estimator e) const {
  return root / "scores" / fmt::format("seed{}", seed) /
         fmt::format("{}.scores", confidence::to_string(e));
}

fs::path Layout::plot(const protocol::ScoreFile& file) const {
  return report_dir() / "plot" /
         fmt::format("{}-{}_{}_{}_{}_seed{}.csv", header_field(file, "train_set"),
                     header_field(file, "test_set"), header_field(file, "head"),
                     header_field(file, "loss"), header_field(file, "estimator"),
                     header_field(file, "seed"));
}

protocol::ScoreFile make_score_file(const RunConfig& config, std::uint64_t seed,
                                    Estimator estimator,
                                    std::vector<metrics::ScoreRecord> records) {
  protocol::ScoreFile f;
  f.header["protocol"] = config.protocol;
  f.header["train_set"] = config.train_set();
  f.header["test_set"] = config.test_set();
  f.header["head"] = cm::to_string(config.head);
  f.header["loss"] = cm::to_string(config.loss);
  f.header["estimator"] = confidence::to_string(estimator);
  f.header["seed"] = fmt::format("{}", seed);
  f.header["preset"] = config.preset;
  f.header["data_seed"] = fmt::format("{}", config.data_seed);
  f.records = std::move(records);
  return f;
}

namespace {

bool needs(const RunConfig& config, Estimator e) {
  return std::find(config.estimators.begin(), config.estimators.end(), e) !=
         config.estimators.end();
}

struct SeedModels {
  cm::CmModel model;
  std::vector<cm::EpochLog> log;
  std::optional<confidence::SupervisedEstimator> supervised;
};

SeedModels train_seed(const RunConfig& config, const PooledSet& train, std::uint64_t seed,
                      const Progress& progress) {
  progress(fmt::format("training {} {} {} seed {}", config.protocol, cm::to_string(config.head),
                       cm::to_string(config.loss), seed));
  const auto examples = cm_examples(train);
  auto trained = cm::train(cm_train_config(config), examples, seed);
  SeedModels out{std::move(trained.model), std::move(trained.log), std::nullopt};
  if (needs(config, Estimator::kSupervised)) {
    progress(fmt::format("training supervised estimator seed {}", seed));
    out.supervised = train_supervised(config, train, seed);
  }
  return out;
}

Manifest model_manifest(const RunConfig& config, std::uint64_t seed) {
  return {{"protocol", config.protocol},
          {"loss", std::string(cm::to_string(config.loss))},
          {"seed", fmt::format("{}", seed)},
          {"preset", config.preset},
          {"data_seed", fmt::format("{}", config.data_seed)}};
}

void check_model_matches(const RunConfig& config, const cm::LoadedModel& loaded,
                         const fs::path& path) {
  const auto head = loaded.manifest.find("head");
  if (head != loaded.manifest.end() && head->second != cm::to_string(config.head)) {
    throw UsageError(fmt::format("model '{}' has head '{}' but the config asks for '{}'",
                                 path.string(), head->second, cm::to_string(config.head)));
  }
  const auto loss = loaded.manifest.find("loss");
  if (loss != loaded.manifest.end() && loss->second != cm::to_string(config.loss)) {
    throw UsageError(fmt::format("model '{}' was trained with loss '{}' but the config says '{}'",
                                 path.string(), loss->second, cm::to_string(config.loss)));
  }
}

}  // namespace

void run_train(const RunConfig& config, bool force, const std::optional<fs::path>& train_list,
               const Progress& progress) {
  config.validate();
  const Layout layout{config.output_dir};
  for (auto seed : config.seeds) {
    check_writable(layout.model(seed), force);
    if (needs(config, Estimator::kSupervised)) check_writable(layout.supervised(seed), force);
  }
  const auto train = load_set(config, true, train_list);
  write_text(layout.config(), config.to_ini());
  for (auto seed : config.seeds) {
    const auto models = train_seed(config, train, seed, progress);
    fs::create_directories(layout.seed_dir(seed));
    cm::save_model(layout.model(seed), models.model, model_manifest(config, seed));
    write_text(layout.train_log(seed), cm::training_log_csv(models.log));
    if (models.supervised) {
      auto manifest = model_manifest(config, seed);
      manifest["role"] = "supervised";
      cm::save_model(layout.supervised(seed), models.supervised->model(), manifest);
    }
  }
}

void run_fit_gaussians(const RunConfig& config, bool force,
                       const std::optional<fs::path>& train_list, const Progress& progress) {
  config.validate();
  const Layout layout{config.output_dir};
  for (auto seed : config.seeds) check_writable(layout.gaussians(seed), force);
  const auto train = load_set(config, true, train_list);
  for (auto seed : config.seeds) {
    progress(fmt::format("fitting Gaussians seed {}", seed));
    const auto loaded = cm::load_model(layout.model(seed));
    const auto stats = fit_gaussians(loaded.model, train, config.gaussian_per_attack,
                                     config.covariance_jitter, config.jobs);
    save_gaussian_stats(layout.gaussians(seed), stats);
  }
}

std::vector<protocol::ScoreFile> run_score(const RunConfig& config, bool force,
                                           const std::optional<fs::path>& train_list,
                                           const std::optional<fs::path>& test_list,
                                           const Progress& progress) {
  config.validate();
  const Layout layout{config.output_dir};
  for (auto seed : config.seeds) {
    if (!fs::exists(layout.model(seed))) {
      throw DataError(fmt::format("no model at '{}'; run train first", layout.model(seed).string()));
    }
    for (auto e : config.estimators) check_writable(layout.scores(seed, e), force);
  }
  const auto test = load_set(config, false, test_list);
  std::optional<PooledSet> train;
  std::vector<protocol::ScoreFile> files;
  for (auto seed : config.seeds) {
    const auto loaded = cm::load_model(layout.model(seed));
    check_model_matches(config, loaded, layout.model(seed));
    Scorers scorers{&loaded.model, nullptr, nullptr};
    std::optional<confidence::GaussianStats> stats;
    std::string gaussian_note;
    if (needs(config, Estimator::kMDist)) {
      if (fs::exists(layout.gaussians(seed))) {
        stats = confidence::load_gaussian_stats(layout.gaussians(seed));
        gaussian_note = "loaded";
      } else {
        if (!train) train = load_set(config, true, train_list);
        progress(fmt::format("fitting Gaussians seed {}", seed));
        save_gaussian_stats(layout.gaussians(seed),
                            fit_gaussians(loaded.model, *train, config.gaussian_per_attack,
                                          config.covariance_jitter, config.jobs));
        // float32 on disk; score with what a later run will load
        stats = confidence::load_gaussian_stats(layout.gaussians(seed));
        gaussian_note = fmt::format("auto-fitted from {} known trials", config.train_set());
      }
      scorers.gaussians = &*stats;
    }
    std::optional<confidence::SupervisedEstimator> supervised;
    if (needs(config, Estimator::kSupervised)) {
      if (!fs::exists(layout.supervised(seed))) {
        throw DataError(fmt::format("no supervised model at '{}'; run train with the supervised "
                                    "estimator configured",
                                    layout.supervised(seed).string()));
      }
      supervised.emplace(cm::load_model(layout.supervised(seed)).model);
      scorers.supervised = &*supervised;
    }
    for (auto e : config.estimators) {
      progress(fmt::format("scoring {} seed {}", confidence::to_string(e), seed));
      auto file = make_score_file(config, seed, e, score_set(test, e, scorers, config.jobs));
      file.header["model"] = fs::relative(layout.model(seed), layout.root).generic_string();
      if (e == Estimator::kMDist) file.header["gaussians"] = gaussian_note;
      fs::create_directories(layout.scores(seed, e).parent_path());
      protocol::write_score_file(layout.scores(seed, e), file);
      files.push_back(std::move(file));
    }
  }
  return files;
}

std::vector<ReportRow> run_eval(std::span<const protocol::ScoreFile> files, double target_tpr,
                                const fs::path& report_dir, bool force) {
  if (files.empty()) throw UsageError("no score files given");
  const Layout layout{report_dir.parent_path()};
  check_writable(report_dir / "report.csv", force);
  auto rows = evaluate_score_files(files, target_tpr);
  write_text(report_dir / "report.csv", report_csv(rows));
  write_text(report_dir / "report.txt", report_table(rows));
  for (const auto& f : files) {
    const auto name = layout.plot(f).filename();
    write_text(report_dir / "plot" / name, plot_csv(f));
  }
  return rows;
}

PipelineResult run_in_memory(const RunConfig& config, const Progress& progress) {
  config.validate();
  const auto train = load_set(config, true, std::nullopt);
  const auto test = load_set(config, false, std::nullopt);
  PipelineResult result;
  for (auto seed : config.seeds) {
    const auto models = train_seed(config, train, seed, progress);
    Scorers scorers{&models.model, nullptr, nullptr};
    std::optional<confidence::GaussianStats> stats;
    if (needs(config, Estimator::kMDist)) {
      stats = fit_gaussians(models.model, train, config.gaussian_per_attack,
                            config.covariance_jitter, config.jobs);
      scorers.gaussians = &*stats;
    }
    if (models.supervised) scorers.supervised = &*models.supervised;
    for (auto e : config.estimators) {
      result.score_files.push_back(
          make_score_file(config, seed, e, score_set(test, e, scorers, config.jobs)));
    }
  }
  result.rows = evaluate_score_files(result.score_files, config.target_tpr);
  return result;
}

void run_gen_data(const RunConfig& config, bool force, const Progress& progress) {
  config.validate();
  const Layout layout{config.output_dir};
  const auto pair = protocol::assemble(config.protocol, config.counts);
  const auto spec = protocol::make_generator_spec(config.preset, config.data_seed);
  for (const auto* set : {&pair.train, &pair.test}) {
    check_writable(layout.data(set->name) / "trials.lst", force);
  }
  for (const auto* set : {&pair.train, &pair.test}) {
    progress(fmt::format("generating set {}", set->name));
    const fs::path dir = layout.data(set->name);
    fs::create_directories(dir);
    const auto trials = protocol::list_trials(*set);
    std::vector<protocol::Trial> written(trials.size());
    parallel_for(trials.size(), config.jobs, [&](std::size_t i) {
      const auto& t = trials[i];
      const std::string pop = t.source.substr(kSynthPrefix.size());
      const auto w = protocol::synthesize(spec.populations.at(pop), derive_seed(spec.seed, t.id),
                                          spec.sample_rate);
      const std::string file = t.id + ".wav";
      features::write_wav(dir / file, w, features::WavEncoding::kFloat32);
      written[i] = t;
      written[i].source = file;
    });
    protocol::write_trial_list(dir / "trials.lst", written);
  }
}

}  // namespace cmconf::experiment
