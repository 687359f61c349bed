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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cmconf/config.hpp"
#include "cmconf/errors.hpp"
#include "cmconf/experiment.hpp"
#include "cmconf/score_io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace cmconf;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct CommonOptions {
  std::optional<fs::path> config_file;
  std::vector<std::string> overrides;
  std::optional<std::string> protocol;
  std::optional<std::string> head;
  std::optional<std::string> loss;
  std::optional<std::string> estimators;
  std::optional<std::string> seeds;
  std::optional<std::string> preset;
  std::optional<fs::path> output;
  std::optional<int> jobs;
  bool force = false;
  bool quiet = false;
};

// defaults < config file < CMCONF_OUTPUT_ROOT < flags
RunConfig resolve(const CommonOptions& o) {
  RunConfig config = o.config_file ? load_run_config(*o.config_file) : RunConfig{};
  if (const char* root = std::getenv("CMCONF_OUTPUT_ROOT"); root && *root) {
    if (config.output_dir.is_relative()) config.output_dir = fs::path(root) / config.output_dir;
  }
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw UsageError(fmt::format("--set expects section.key=value, got '{}'", kv));
    }
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.protocol) config.set("run.protocol", *o.protocol);
  if (o.head) config.set("run.head", *o.head);
  if (o.loss) config.set("run.loss", *o.loss);
  if (o.estimators) config.set("run.estimators", *o.estimators);
  if (o.seeds) config.set("run.seeds", *o.seeds);
  if (o.preset) config.set("data.preset", *o.preset);
  if (o.output) config.output_dir = *o.output;
  if (o.jobs) config.jobs = *o.jobs;
  return config;
}

experiment::Progress progress(const CommonOptions& o) {
  if (o.quiet) return {};
  return {[](std::string_view m) { std::cerr << m << '\n'; }};
}

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("-c,--config", o.config_file, "INI config file (see print-config)");
  app.add_option("--set", o.overrides, "Override one entry: section.key=value")->take_all();
  app.add_option("--protocol", o.protocol, "Protocol, e.g. T1-E2");
  app.add_option("--head", o.head, "plain|am");
  app.add_option("--loss", o.loss, "ce|branch|oe|energy_reg");
  app.add_option("--estimators", o.estimators, "Comma list of max_prob,energy,m_dist,branch,supervised");
  app.add_option("--seeds", o.seeds, "Comma list of training seeds");
  app.add_option("--preset", o.preset, "Synthetic data preset: far|near|degenerate");
  app.add_option("-o,--output", o.output, "Output directory");
  app.add_option("-j,--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-f,--force", o.force, "Overwrite existing outputs");
  app.add_flag("-q,--quiet", o.quiet, "No progress messages");
}

int run(int argc, char** argv) {
  CLI::App app{"Spoofing countermeasure training and confidence scoring"};
  app.require_subcommand(1);
  CommonOptions opts;
  std::optional<fs::path> train_list;
  std::optional<fs::path> test_list;
  std::vector<fs::path> score_files;
  std::optional<fs::path> report_dir;

  auto* print_config = app.add_subcommand("print-config", "Print the resolved configuration");
  auto* gen_data = app.add_subcommand("gen-data", "Write the synthetic train and test sets as WAV");
  auto* train = app.add_subcommand("train", "Train one model per seed");
  auto* fit = app.add_subcommand("fit-gaussians", "Fit class Gaussians for the m_dist estimator");
  auto* score = app.add_subcommand("score", "Score the test set with every estimator");
  auto* eval = app.add_subcommand("eval", "Evaluate score files into a report and plot data");
  auto* report = app.add_subcommand("report", "Run train, score and eval in one go");
  for (auto* sub : {print_config, gen_data, train, fit, score, eval, report}) {
    add_common(*sub, opts);
  }
  for (auto* sub : {train, fit, score, report}) {
    sub->add_option("--train-list", train_list, "Trial list of the train set (default: synthesize)")
        ->check(CLI::ExistingFile);
  }
  for (auto* sub : {score, report}) {
    sub->add_option("--test-list", test_list, "Trial list of the test set (default: synthesize)")
        ->check(CLI::ExistingFile);
  }
  eval->add_option("files", score_files, "Score files (default: every file of the run)");
  eval->add_option("--report-dir", report_dir, "Where report files go (default: <output>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const RunConfig config = resolve(opts);
  const auto prog = progress(opts);
  const experiment::Layout layout{config.output_dir};

  if (print_config->parsed()) {
    std::cout << config.to_ini();
    return 0;
  }
  if (gen_data->parsed()) {
    experiment::run_gen_data(config, opts.force, prog);
    return 0;
  }
  if (train->parsed()) {
    experiment::run_train(config, opts.force, train_list, prog);
    return 0;
  }
  if (fit->parsed()) {
    experiment::run_fit_gaussians(config, opts.force, train_list, prog);
    return 0;
  }
  if (score->parsed()) {
    experiment::run_score(config, opts.force, train_list, test_list, prog);
    return 0;
  }
  if (eval->parsed()) {
    std::vector<protocol::ScoreFile> files;
    if (score_files.empty()) {
      config.validate();
      for (auto seed : config.seeds) {
        for (auto e : config.estimators) score_files.push_back(layout.scores(seed, e));
      }
    }
    for (const auto& p : score_files) files.push_back(protocol::read_score_file(p));
    const auto rows = experiment::run_eval(files, config.target_tpr,
                                           report_dir.value_or(layout.report_dir()), opts.force);
    std::cout << experiment::report_table(rows);
    return 0;
  }
  if (report->parsed()) {
    config.validate();
    if (!opts.force && fs::exists(layout.report_dir() / "report.csv")) {
      throw UsageError(fmt::format("'{}' exists; pass --force to overwrite",
                                   (layout.report_dir() / "report.csv").string()));
    }
    experiment::run_train(config, opts.force, train_list, prog);
    const auto files = experiment::run_score(config, opts.force, train_list, test_list, prog);
    const auto rows =
        experiment::run_eval(files, config.target_tpr, layout.report_dir(), opts.force);
    std::cout << experiment::report_table(rows);
    return 0;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cmconf::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
