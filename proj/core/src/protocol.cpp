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

#include "cmconf/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "cmconf/errors.hpp"
#include "cmconf/parallel.hpp"
#include "cmconf/rng.hpp"

namespace cmconf::protocol {

std::string_view to_string(TrialClass c) {
  return c == TrialClass::kBonafide ? "bonafide" : "spoof";
}

TrialClass parse_trial_class(std::string_view text) {
  if (text == "bonafide") return TrialClass::kBonafide;
  if (text == "spoof") return TrialClass::kSpoof;
  throw DataError(fmt::format("unknown trial class '{}' (expected bonafide|spoof)", text));
}

namespace {

PopulationParams population(double f0_min, double f0_max, int harmonics, double tilt_min,
                            double tilt_max, double jitter, double noise) {
  PopulationParams p;
  p.f0_min = f0_min;
  p.f0_max = f0_max;
  p.harmonics = harmonics;
  p.tilt_min = tilt_min;
  p.tilt_max = tilt_max;
  p.jitter = jitter;
  p.noise = noise;
  return p;
}

PopulationParams colored(PopulationParams p, double gain, double lo, double hi, double width) {
  p.formant_gain = gain;
  p.formant_min = lo;
  p.formant_max = hi;
  p.formant_width = width;
  return p;
}

}  // namespace

GeneratorSpec make_generator_spec(std::string_view preset, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.preset = std::string(preset);
  auto& pop = spec.populations;
  //                      f0 range     harm  tilt range  jitter noise
  pop["bonafide"] = population(110, 180, 24, 1.0, 1.4, 0.010, 0.002);
  pop["A01"] = population(110, 180, 24, 0.3, 0.6, 0.010, 0.002);
  pop["A02"] = population(110, 180, 10, 1.0, 1.4, 0.000, 0.010);

  const PopulationParams bonafide = pop["bonafide"];
  const PopulationParams a01 = pop["A01"];
  const PopulationParams a02 = pop["A02"];

  // Test unknowns carry a resonance the known data never has; train unknowns
  // (T2 / T3) carry a notch instead.
  if (preset == "far") {
    pop["U01"] = colored(a01, 40.0, 3000, 3800, 300);
    pop["U02"] = colored(a02, 40.0, 600, 1000, 300);
    pop["VCB"] = colored(bonafide, 40.0, 1500, 2500, 300);
    pop["VCS"] = colored(a01, 40.0, 1500, 2500, 300);
    pop["ESB"] = colored(bonafide, -0.95, 1500, 2500, 400);
    pop["ESS"] = colored(a01, -0.95, 1500, 2500, 400);
    pop["BZB"] = colored(population(110, 180, 24, 1.0, 1.4, 0.020, 0.003), -0.9, 1000, 2000, 500);
    pop["BZS"] = colored(population(110, 180, 20, 0.3, 0.6, 0.020, 0.003), -0.9, 1000, 2000, 500);
  } else if (preset == "near") {
    pop["U01"] = colored(population(110, 180, 24, 0.4, 0.8, 0.010, 0.002), 2.0, 3000, 3800, 300);
    pop["U02"] = colored(population(110, 180, 12, 0.9, 1.3, 0.002, 0.008), 2.0, 600, 1000, 300);
    pop["VCB"] = colored(population(110, 180, 24, 0.9, 1.3, 0.010, 0.002), 2.0, 1500, 2500, 300);
    pop["VCS"] = colored(population(110, 180, 24, 0.4, 0.8, 0.010, 0.003), 2.0, 1500, 2500, 300);
    pop["ESB"] = colored(bonafide, -0.5, 1500, 2500, 400);
    pop["ESS"] = colored(a01, -0.5, 1500, 2500, 400);
    pop["BZB"] = colored(population(110, 180, 24, 1.0, 1.4, 0.015, 0.003), -0.5, 1000, 2000, 500);
    pop["BZS"] = colored(population(110, 180, 20, 0.3, 0.6, 0.015, 0.003), -0.5, 1000, 2000, 500);
  } else if (preset == "degenerate") {
    for (const char* name : {"VCB", "ESB", "BZB"}) pop[name] = pop["bonafide"];
    for (const char* name : {"U01", "VCS", "ESS"}) pop[name] = pop["A01"];
    for (const char* name : {"U02", "BZS"}) pop[name] = pop["A02"];
  } else {
    throw UsageError(
        fmt::format("unknown generator preset '{}' (expected far|near|degenerate)", preset));
  }
  return spec;
}

std::string attack_tag_for(const Cell& cell) {
  if (cell.trial_class == TrialClass::kBonafide) return "";
  return cell.population;
}

SetConfig set_config(std::string_view name, const Counts& counts) {
  SetConfig set;
  set.name = std::string(name);
  const auto add = [&set](std::string pop, TrialClass c, bool known, std::size_t n,
                          const char* prefix) {
    if (n > 0) set.cells.push_back({std::move(pop), c, known, n, prefix});
  };
  constexpr auto kB = TrialClass::kBonafide;
  constexpr auto kS = TrialClass::kSpoof;
  const auto unknown_bonafide = [](std::size_t total) { return std::max<std::size_t>(1, total / 8); };

  if (name == "T1" || name == "T2" || name == "T3") {
    set.is_train = true;
    add("bonafide", kB, true, counts.train_bonafide, "trn");
    add("A01", kS, true, counts.train_spoof / 2, "trn");
    add("A02", kS, true, counts.train_spoof - counts.train_spoof / 2, "trn");
    if (name != "T1") {
      const std::size_t nb = unknown_bonafide(counts.train_unknown);
      const bool t2 = name == "T2";
      add(t2 ? "ESB" : "BZB", kB, false, nb, "trn");
      add(t2 ? "ESS" : "BZS", kS, false, counts.train_unknown - nb, "trn");
    }
  } else if (name == "E1" || name == "E2") {
    set.is_train = false;
    add("bonafide", kB, true, counts.test_bonafide, "tst");
    add("A01", kS, true, counts.test_spoof / 2, "tst");
    add("A02", kS, true, counts.test_spoof - counts.test_spoof / 2, "tst");
    if (name == "E1") {
      add("U01", kS, false, counts.test_unknown_spoof / 2, "tst");
      add("U02", kS, false, counts.test_unknown_spoof - counts.test_unknown_spoof / 2, "tst");
    } else {
      add("VCB", kB, false, counts.test_unknown_bonafide, "tst");
      add("VCS", kS, false, counts.test_unknown_spoof, "tst");
    }
  } else {
    throw UsageError(fmt::format("unknown set '{}' (expected T1|T2|T3|E1|E2)", name));
  }
  return set;
}

ProtocolPair assemble(std::string_view protocol, const Counts& counts) {
  const auto dash = protocol.find('-');
  if (dash == std::string_view::npos) {
    throw UsageError(fmt::format("protocol '{}' is not of the form T<n>-E<n>", protocol));
  }
  ProtocolPair pair{set_config(protocol.substr(0, dash), counts),
                    set_config(protocol.substr(dash + 1), counts)};
  if (!pair.train.is_train || pair.test.is_train) {
    throw UsageError(fmt::format("protocol '{}' must pair a train set with a test set",
                                 protocol));
  }
  return pair;
}

std::vector<Trial> list_trials(const SetConfig& set) {
  std::vector<Trial> trials;
  for (const auto& cell : set.cells) {
    if (cell.count == 0) {
      throw DataError(fmt::format("set {}: cell '{}' is empty", set.name, cell.population));
    }
    for (std::size_t i = 0; i < cell.count; ++i) {
      trials.push_back({fmt::format("{}_{}_{:05d}", cell.id_prefix, cell.population, i),
                        cell.trial_class, attack_tag_for(cell), cell.known,
                        "synth:" + cell.population});
    }
  }
  return trials;
}

features::Waveform synthesize(const PopulationParams& p, std::uint64_t seed, int sample_rate) {
  if (!(p.f0_min > 0.0 && p.f0_min <= p.f0_max) || p.harmonics < 1 ||
      !(p.tilt_min <= p.tilt_max) || !(p.duration_min > 0.0 && p.duration_min <= p.duration_max) ||
      p.jitter < 0.0 || p.noise < 0.0 || !(p.formant_gain > -1.0) ||
      !(p.formant_min <= p.formant_max) || !(p.formant_width > 0.0) || sample_rate <= 0) {
    throw UsageError("invalid synthetic population parameters");
  }
  Rng rng(seed);
  const double duration = rng.uniform(p.duration_min, p.duration_max);
  const double f0 = rng.uniform(p.f0_min, p.f0_max);
  const double tilt = rng.uniform(p.tilt_min, p.tilt_max);
  const double vibrato_rate = rng.uniform(4.0, 7.0);
  const double vibrato_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double envelope_rate = rng.uniform(2.0, 5.0);
  const double envelope_phase = rng.uniform(0.0, 2.0 * M_PI);
  const double formant = rng.uniform(p.formant_min, p.formant_max);
  const double nyquist = sample_rate / 2.0;

  std::vector<double> gains;
  std::vector<double> phases;
  double gain_sum = 0.0;
  for (int k = 1; k <= p.harmonics; ++k) {
    const double offset = (k * f0 - formant) / p.formant_width;
    gains.push_back(std::pow(static_cast<double>(k), -tilt) *
                    (1.0 + p.formant_gain * std::exp(-0.5 * offset * offset)));
    phases.push_back(rng.uniform(0.0, 2.0 * M_PI));
    gain_sum += gains.back();
  }

  features::Waveform w;
  w.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(duration * sample_rate));
  w.samples.resize(n);
  double base_phase = 0.0;  // integral of the instantaneous f0, in cycles
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double inst_f0 =
        f0 * (1.0 + p.jitter * std::sin(2.0 * M_PI * vibrato_rate * t + vibrato_phase));
    double v = 0.0;
    for (int k = 1; k <= p.harmonics; ++k) {
      if (k * inst_f0 >= nyquist) break;
      v += gains[k - 1] * std::sin(2.0 * M_PI * k * base_phase + phases[k - 1]);
    }
    const double envelope =
        0.65 + 0.35 * std::sin(2.0 * M_PI * envelope_rate * t + envelope_phase);
    v = p.amplitude * envelope * v / gain_sum + p.noise * rng.normal();
    w.samples[i] = std::clamp(v, -1.0, 1.0);
    base_phase += inst_f0 / sample_rate;
  }
  return w;
}

std::vector<GeneratedTrial> generate_trials(const GeneratorSpec& spec, const SetConfig& set,
                                            int jobs) {
  for (const auto& cell : set.cells) {
    if (!spec.populations.contains(cell.population)) {
      throw DataError(fmt::format("set {}: population '{}' is not defined by preset '{}'",
                                  set.name, cell.population, spec.preset));
    }
  }
  const std::vector<Trial> trials = list_trials(set);
  std::vector<GeneratedTrial> out(trials.size());
  parallel_for(trials.size(), jobs, [&](std::size_t i) {
    const Trial& t = trials[i];
    const std::string pop = t.source.substr(std::string_view("synth:").size());
    out[i] = {t, synthesize(spec.populations.at(pop), derive_seed(spec.seed, t.id),
                            spec.sample_rate)};
  });
  return out;
}

void write_trial_list(const std::filesystem::path& path, const std::vector<Trial>& trials) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "# id class attack_tag known source\n";
  for (const auto& t : trials) {
    out << fmt::format("{} {} {} {} {}\n", t.id, to_string(t.trial_class),
                       t.attack_tag.empty() ? "-" : t.attack_tag,
                       t.known ? "known" : "unknown", t.source);
  }
}

std::vector<Trial> read_trial_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open trial list '{}'", path.string()));
  std::vector<Trial> trials;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string id, cls, tag, known, source, extra;
    if (!(fields >> id >> cls >> tag >> known >> source) || (fields >> extra)) {
      throw DataError(fmt::format("{}:{}: expected 5 fields: id class attack_tag known source",
                                  path.string(), line_no));
    }
    Trial t;
    t.id = id;
    try {
      t.trial_class = parse_trial_class(cls);
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    t.attack_tag = tag == "-" ? "" : tag;
    if (known != "known" && known != "unknown") {
      throw DataError(fmt::format("{}:{}: known flag must be known|unknown", path.string(),
                                  line_no));
    }
    t.known = known == "known";
    t.source = source;
    if ((t.trial_class == TrialClass::kBonafide) != t.attack_tag.empty()) {
      throw DataError(fmt::format("{}:{}: attack tag must be '-' exactly for bona fide trials",
                                  path.string(), line_no));
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

}  // namespace cmconf::protocol
