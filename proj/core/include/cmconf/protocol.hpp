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

#ifndef CMCONF_PROTOCOL_HPP_
#define CMCONF_PROTOCOL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cmconf/features.hpp"
#include "cmconf/metrics.hpp"

namespace cmconf::protocol {

using metrics::TrialClass;

std::string_view to_string(TrialClass c);
TrialClass parse_trial_class(std::string_view text);

struct Trial {
  std::string id;
  TrialClass trial_class = TrialClass::kBonafide;
  std::string attack_tag;  // empty for bona fide
  bool known = true;
  std::string source;  // audio path, or "synth:<population>" for generated trials

  friend bool operator==(const Trial&, const Trial&) = default;
};

// Parameters of one synthetic population. A trial is a harmonic tone with
// spectral tilt (harmonic k has amplitude k^-tilt), slow f0 vibrato of
// relative depth `jitter`, a syllable-rate amplitude envelope and white
// noise of standard deviation `noise`. A nonzero formant_gain boosts the
// harmonics near a resonance drawn from [formant_min, formant_max] Hz by up to
// a factor 1 + formant_gain.
struct PopulationParams {
  double f0_min = 100.0;
  double f0_max = 200.0;
  int harmonics = 20;
  double tilt_min = 1.0;
  double tilt_max = 1.5;
  double jitter = 0.01;
  double noise = 0.002;
  double duration_min = 0.6;  // seconds
  double duration_max = 1.0;
  double amplitude = 0.3;
  double formant_gain = 0.0;
  double formant_min = 1000.0;
  double formant_max = 2000.0;
  double formant_width = 250.0;  // Hz, Gaussian bandwidth
};

// Population names used by the presets:
//   bonafide, A01, A02        known bona fide and known attacks (train and test)
//   U01, U02                  unknown attacks of set E1
//   VCB, VCS                  unknown bona fide / spoof of set E2
//   ESB, ESS                  unknown bona fide / spoof of set T2
//   BZB, BZS                  unknown bona fide / spoof of set T3
struct GeneratorSpec {
  std::uint64_t seed = 0;
  std::string preset = "far";
  int sample_rate = 16000;
  std::map<std::string, PopulationParams> populations;
};

// "far": unknown populations drawn from ranges disjoint from the known ones.
// "near": unknown ranges overlap the known ones.
// "degenerate": every unknown population copies a known one.
GeneratorSpec make_generator_spec(std::string_view preset, std::uint64_t seed);

// One homogeneous group of trials inside a set.
struct Cell {
  std::string population;
  TrialClass trial_class = TrialClass::kBonafide;
  bool known = true;
  std::size_t count = 0;
  std::string id_prefix;  // "trn" or "tst"; keeps train and test ids disjoint

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct SetConfig {
  std::string name;  // T1 | T2 | T3 | E1 | E2
  bool is_train = true;
  std::vector<Cell> cells;
};

struct Counts {
  std::size_t train_bonafide = 256;
  std::size_t train_spoof = 512;   // split evenly over A01 / A02
  std::size_t train_unknown = 128;  // T2 / T3 unknown cell, bona fide + spoof
  std::size_t test_bonafide = 256;
  std::size_t test_spoof = 512;
  std::size_t test_unknown_spoof = 512;
  std::size_t test_unknown_bonafide = 64;  // E2 only
};

// Composition of one named set. T1 is known only; T2 / T3 add unknown trials
// disjoint from the test populations; E1 adds unknown spoofs only; E2 adds
// unknown bona fide and spoofed trials. Throws UsageError for an unknown name.
SetConfig set_config(std::string_view name, const Counts& counts = {});

struct ProtocolPair {
  SetConfig train;
  SetConfig test;
};

// "T1-E2" style names.
ProtocolPair assemble(std::string_view protocol, const Counts& counts = {});

// The attack tag a population carries in trial lists ("" for bona fide).
std::string attack_tag_for(const Cell& cell);

// Trial list of a set without audio: ids are "<prefix>_<population>_<index>".
std::vector<Trial> list_trials(const SetConfig& set);

// Deterministic waveform for one trial: the seed is derive_seed(spec.seed, id).
features::Waveform synthesize(const PopulationParams& params, std::uint64_t seed,
                              int sample_rate);

struct GeneratedTrial {
  Trial trial;
  features::Waveform waveform;
};

// Throws DataError when a cell is empty or names an unknown population.
std::vector<GeneratedTrial> generate_trials(const GeneratorSpec& spec, const SetConfig& set,
                                            int jobs = 1);

// Trial list file: "id class attack_tag known source" per line, '#' comments,
// "-" for an empty attack tag.
void write_trial_list(const std::filesystem::path& path, const std::vector<Trial>& trials);
std::vector<Trial> read_trial_list(const std::filesystem::path& path);

}  // namespace cmconf::protocol

#endif  // CMCONF_PROTOCOL_HPP_
