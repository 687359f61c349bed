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

#include "cmconf/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "cmconf/errors.hpp"

namespace cmconf {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw UsageError(fmt::format("config '{}': '{}' is not a valid number", key, text));
  }
  return v;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

template <typename T>
Setter number(T RunConfig::*member) {
  return [member](RunConfig& c, std::string_view k, std::string_view v) {
    c.*member = parse_number<T>(k, v);
  };
}

template <typename T, typename Getter>
Setter nested(Getter get) {
  return [get](RunConfig& c, std::string_view k, std::string_view v) {
    get(c) = parse_number<T>(k, v);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"run.protocol", [](RunConfig& c, auto, auto v) { c.protocol = trim(v); }},
      {"run.head", [](RunConfig& c, auto, auto v) { c.head = cm::parse_head_kind(trim(v)); }},
      {"run.loss", [](RunConfig& c, auto, auto v) { c.loss = cm::parse_loss_kind(trim(v)); }},
      {"run.estimators",
       [](RunConfig& c, auto, auto v) {
         c.estimators.clear();
         for (const auto& item : split_list(v)) {
           c.estimators.push_back(confidence::parse_estimator(item));
         }
       }},
      {"run.seeds",
       [](RunConfig& c, auto k, auto v) {
         c.seeds.clear();
         for (const auto& item : split_list(v)) {
           c.seeds.push_back(parse_number<std::uint64_t>(k, item));
         }
       }},
      {"run.output_dir", [](RunConfig& c, auto, auto v) { c.output_dir = trim(v); }},
      {"run.jobs", number(&RunConfig::jobs)},
      {"run.target_tpr", number(&RunConfig::target_tpr)},
      {"data.preset", [](RunConfig& c, auto, auto v) { c.preset = trim(v); }},
      {"data.seed", number(&RunConfig::data_seed)},
      {"data.train_bonafide", nested<std::size_t>([](RunConfig& c) -> auto& { return c.counts.train_bonafide; })},
      {"data.train_spoof", nested<std::size_t>([](RunConfig& c) -> auto& { return c.counts.train_spoof; })},
      {"data.train_unknown", nested<std::size_t>([](RunConfig& c) -> auto& { return c.counts.train_unknown; })},
      {"data.test_bonafide", nested<std::size_t>([](RunConfig& c) -> auto& { return c.counts.test_bonafide; })},
      {"data.test_spoof", nested<std::size_t>([](RunConfig& c) -> auto& { return c.counts.test_spoof; })},
      {"data.test_unknown_spoof", nested<std::size_t>([](RunConfig& c) -> auto& { return c.counts.test_unknown_spoof; })},
      {"data.test_unknown_bonafide", nested<std::size_t>([](RunConfig& c) -> auto& { return c.counts.test_unknown_bonafide; })},
      {"features.frame_len", nested<int>([](RunConfig& c) -> auto& { return c.lfcc.frame_len; })},
      {"features.frame_shift", nested<int>([](RunConfig& c) -> auto& { return c.lfcc.frame_shift; })},
      {"features.fft_size", nested<int>([](RunConfig& c) -> auto& { return c.lfcc.fft_size; })},
      {"features.n_filters", nested<int>([](RunConfig& c) -> auto& { return c.lfcc.n_filters; })},
      {"features.n_ceps", nested<int>([](RunConfig& c) -> auto& { return c.lfcc.n_ceps; })},
      {"features.log_floor", nested<double>([](RunConfig& c) -> auto& { return c.lfcc.log_floor; })},
      {"train.epochs", nested<int>([](RunConfig& c) -> auto& { return c.train.epochs; })},
      {"train.batch_size", nested<int>([](RunConfig& c) -> auto& { return c.train.batch_size; })},
      {"train.unknown_per_batch", nested<int>([](RunConfig& c) -> auto& { return c.train.unknown_per_batch; })},
      {"train.learning_rate", nested<double>([](RunConfig& c) -> auto& { return c.train.adam.learning_rate; })},
      {"train.halve_every_epochs", nested<int>([](RunConfig& c) -> auto& { return c.train.adam.halve_every_epochs; })},
      {"train.beta1", nested<double>([](RunConfig& c) -> auto& { return c.train.adam.beta1; })},
      {"train.beta2", nested<double>([](RunConfig& c) -> auto& { return c.train.adam.beta2; })},
      {"train.epsilon", nested<double>([](RunConfig& c) -> auto& { return c.train.adam.epsilon; })},
      {"cm.hidden",
       [](RunConfig& c, auto k, auto v) {
         c.train.model.hidden.clear();
         for (const auto& item : split_list(v)) {
           c.train.model.hidden.push_back(parse_number<std::size_t>(k, item));
         }
       }},
      {"cm.am_margin", nested<double>([](RunConfig& c) -> auto& { return c.train.model.am_margin; })},
      {"cm.am_scale", nested<double>([](RunConfig& c) -> auto& { return c.train.model.am_scale; })},
      {"cm.branch_hidden", nested<std::size_t>([](RunConfig& c) -> auto& { return c.train.model.branch_hidden; })},
      {"cm.lambda0", nested<double>([](RunConfig& c) -> auto& { return c.train.budget.initial_lambda; })},
      {"cm.budget", nested<double>([](RunConfig& c) -> auto& { return c.train.budget.budget; })},
      {"cm.budget_factor", nested<double>([](RunConfig& c) -> auto& { return c.train.budget.factor; })},
      {"cm.lambda_min", nested<double>([](RunConfig& c) -> auto& { return c.train.budget.min_lambda; })},
      {"cm.lambda_max", nested<double>([](RunConfig& c) -> auto& { return c.train.budget.max_lambda; })},
      {"cm.hint_fraction", nested<double>([](RunConfig& c) -> auto& { return c.train.hint_fraction; })},
      {"cm.oe_weight", nested<double>([](RunConfig& c) -> auto& { return c.train.oe_weight; })},
      {"cm.energy_weight", nested<double>([](RunConfig& c) -> auto& { return c.train.energy.weight; })},
      {"cm.energy_margin_known", nested<double>([](RunConfig& c) -> auto& { return c.train.energy.margin_known; })},
      {"cm.energy_margin_unknown", nested<double>([](RunConfig& c) -> auto& { return c.train.energy.margin_unknown; })},
      {"confidence.covariance_jitter", number(&RunConfig::covariance_jitter)},
      {"confidence.gaussian_classes",
       [](RunConfig& c, auto k, auto v) {
         const std::string t = trim(v);
         if (t != "attack" && t != "binary") {
           throw UsageError(fmt::format("config '{}': expected attack|binary, got '{}'", k, v));
         }
         c.gaussian_per_attack = t == "attack";
       }},
  };
  return table;
}

template <typename Range>
std::string join(const Range& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ",";
    out += fmt::format("{}", item);
  }
  return out;
}

}  // namespace

bool train_set_has_unknown(std::string_view train_set) {
  return train_set == "T2" || train_set == "T3";
}

std::string RunConfig::train_set() const { return protocol.substr(0, protocol.find('-')); }

std::string RunConfig::test_set() const {
  const auto dash = protocol.find('-');
  return dash == std::string::npos ? std::string() : protocol.substr(dash + 1);
}

void RunConfig::set(std::string_view dotted_key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(dotted_key);
  if (it == table.end()) throw UsageError(fmt::format("unknown config key '{}'", dotted_key));
  it->second(*this, dotted_key, value);
}

void RunConfig::validate() const {
  (void)protocol::assemble(protocol, counts);
  (void)protocol::make_generator_spec(preset, data_seed);
  lfcc.validate();
  if (3 * static_cast<std::size_t>(lfcc.n_ceps) != train.model.input_dim) {
    throw UsageError(fmt::format("features produce {} dims but the model expects {}",
                                 3 * lfcc.n_ceps, train.model.input_dim));
  }
  if (seeds.empty()) throw UsageError("run.seeds is empty");
  if (estimators.empty()) throw UsageError("run.estimators is empty");
  if (jobs < 1) throw UsageError("run.jobs must be >= 1");
  if (!(target_tpr > 0.0 && target_tpr <= 1.0)) throw UsageError("run.target_tpr must be in (0, 1]");
  if (train.epochs < 1) throw UsageError("train.epochs must be >= 1");
  if (train.batch_size < 2 || train.batch_size % 2 != 0) {
    throw UsageError("train.batch_size must be a positive even number");
  }
  const bool has_unknown = train_set_has_unknown(train_set());
  for (auto e : estimators) {
    if (e == confidence::Estimator::kSupervised && !has_unknown) {
      throw UsageError(fmt::format(
          "estimator 'supervised' needs unknown training trials; protocol {} has none",
          protocol));
    }
    if (e == confidence::Estimator::kBranch && loss != cm::LossKind::kBranch) {
      throw UsageError("estimator 'branch' needs run.loss = branch");
    }
  }
  if ((loss == cm::LossKind::kOutlierExposure || loss == cm::LossKind::kEnergyRegularized) &&
      !has_unknown) {
    throw UsageError(fmt::format("loss '{}' needs unknown training trials; protocol {} has none",
                                 cm::to_string(loss), protocol));
  }
}

std::string RunConfig::to_ini() const {
  std::vector<std::string_view> est;
  for (auto e : estimators) est.push_back(confidence::to_string(e));
  const auto& t = train;
  std::string out;
  out += "[run]\n";
  out += fmt::format("protocol = {}\n", protocol);
  out += fmt::format("head = {}\n", cm::to_string(head));
  out += fmt::format("loss = {}\n", cm::to_string(loss));
  out += fmt::format("estimators = {}\n", join(est));
  out += fmt::format("seeds = {}\n", join(seeds));
  out += fmt::format("output_dir = {}\n", output_dir.string());
  out += fmt::format("jobs = {}\n", jobs);
  out += fmt::format("target_tpr = {}\n", target_tpr);
  out += "\n[data]\n";
  out += fmt::format("preset = {}\n", preset);
  out += fmt::format("seed = {}\n", data_seed);
  out += fmt::format("train_bonafide = {}\n", counts.train_bonafide);
  out += fmt::format("train_spoof = {}\n", counts.train_spoof);
  out += fmt::format("train_unknown = {}\n", counts.train_unknown);
  out += fmt::format("test_bonafide = {}\n", counts.test_bonafide);
  out += fmt::format("test_spoof = {}\n", counts.test_spoof);
  out += fmt::format("test_unknown_spoof = {}\n", counts.test_unknown_spoof);
  out += fmt::format("test_unknown_bonafide = {}\n", counts.test_unknown_bonafide);
  out += "\n[features]\n";
  out += fmt::format("frame_len = {}\n", lfcc.frame_len);
  out += fmt::format("frame_shift = {}\n", lfcc.frame_shift);
  out += fmt::format("fft_size = {}\n", lfcc.fft_size);
  out += fmt::format("n_filters = {}\n", lfcc.n_filters);
  out += fmt::format("n_ceps = {}\n", lfcc.n_ceps);
  out += fmt::format("log_floor = {}\n", lfcc.log_floor);
  out += "\n[train]\n";
  out += fmt::format("epochs = {}\n", t.epochs);
  out += fmt::format("batch_size = {}\n", t.batch_size);
  out += fmt::format("unknown_per_batch = {}\n", t.unknown_per_batch);
  out += fmt::format("learning_rate = {}\n", t.adam.learning_rate);
  out += fmt::format("halve_every_epochs = {}\n", t.adam.halve_every_epochs);
  out += fmt::format("beta1 = {}\n", t.adam.beta1);
  out += fmt::format("beta2 = {}\n", t.adam.beta2);
  out += fmt::format("epsilon = {}\n", t.adam.epsilon);
  out += "\n[cm]\n";
  out += fmt::format("hidden = {}\n", join(t.model.hidden));
  out += fmt::format("am_margin = {}\n", t.model.am_margin);
  out += fmt::format("am_scale = {}\n", t.model.am_scale);
  out += fmt::format("branch_hidden = {}\n", t.model.branch_hidden);
  out += fmt::format("lambda0 = {}\n", t.budget.initial_lambda);
  out += fmt::format("budget = {}\n", t.budget.budget);
  out += fmt::format("budget_factor = {}\n", t.budget.factor);
  out += fmt::format("lambda_min = {}\n", t.budget.min_lambda);
  out += fmt::format("lambda_max = {}\n", t.budget.max_lambda);
  out += fmt::format("hint_fraction = {}\n", t.hint_fraction);
  out += fmt::format("oe_weight = {}\n", t.oe_weight);
  out += fmt::format("energy_weight = {}\n", t.energy.weight);
  out += fmt::format("energy_margin_known = {}\n", t.energy.margin_known);
  out += fmt::format("energy_margin_unknown = {}\n", t.energy.margin_unknown);
  out += "\n[confidence]\n";
  out += fmt::format("covariance_jitter = {}\n", covariance_jitter);
  out += fmt::format("gaussian_classes = {}\n", gaussian_per_attack ? "attack" : "binary");
  return out;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError(fmt::format("cannot read config '{}': {}", path.string(), e.what()));
  }
  RunConfig config;
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) {
      throw UsageError(fmt::format("config '{}': key '{}' is outside any section",
                                   path.string(), section));
    }
    for (const auto& [key, value] : entries) {
      config.set(section + "." + key, value.get_value<std::string>());
    }
  }
  return config;
}

}  // namespace cmconf
