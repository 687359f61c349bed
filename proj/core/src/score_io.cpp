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

#include "cmconf/score_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "cmconf/errors.hpp"

namespace cmconf::protocol {
namespace {

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw DataError(fmt::format("{}: '{}' is not a finite number", where, text));
  }
  return v;
}

}  // namespace

std::string format_score_file(const ScoreFile& file) {
  std::string out;
  for (const auto& [key, value] : file.header) out += fmt::format("# {}={}\n", key, value);
  out += "# id attack_tag class known s c\n";
  for (const auto& r : file.records) {
    out += fmt::format("{} {} {} {} {} {}\n", r.trial_id,
                       r.attack_tag.empty() ? "-" : r.attack_tag,
                       r.trial_class == metrics::TrialClass::kBonafide ? "bonafide" : "spoof",
                       r.known ? "known" : "unknown", r.cm_score, r.confidence);
  }
  return out;
}

ScoreFile parse_score_file(std::istream& in, const std::string& source_name) {
  ScoreFile file;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = fmt::format("{}:{}", source_name, line_no);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      const auto eq = line.find('=');
      const auto key_start = line.find_first_not_of(" \t", first + 1);
      if (eq != std::string::npos && key_start != std::string::npos && key_start < eq &&
          line.find(' ', key_start) > eq) {
        std::string value = line.substr(eq + 1);
        while (!value.empty() && (value.back() == '\r' || value.back() == ' ')) value.pop_back();
        file.header[line.substr(key_start, eq - key_start)] = value;
      }
      continue;
    }
    std::istringstream fields(line);
    std::string id, tag, cls, known, s, c, extra;
    if (!(fields >> id >> tag >> cls >> known >> s >> c) || (fields >> extra)) {
      throw DataError(
          fmt::format("{}: expected 6 fields: id attack_tag class known s c", where));
    }
    metrics::ScoreRecord r;
    r.trial_id = id;
    r.attack_tag = tag == "-" ? "" : tag;
    if (cls == "bonafide") {
      r.trial_class = metrics::TrialClass::kBonafide;
    } else if (cls == "spoof") {
      r.trial_class = metrics::TrialClass::kSpoof;
    } else {
      throw DataError(fmt::format("{}: class must be bonafide|spoof, got '{}'", where, cls));
    }
    if (known != "known" && known != "unknown") {
      throw DataError(fmt::format("{}: known flag must be known|unknown, got '{}'", where, known));
    }
    r.known = known == "known";
    r.cm_score = parse_double(s, where);
    r.confidence = parse_double(c, where);
    if ((r.trial_class == metrics::TrialClass::kBonafide) != r.attack_tag.empty()) {
      throw DataError(fmt::format("{}: attack tag must be '-' exactly for bona fide trials", where));
    }
    file.records.push_back(std::move(r));
  }
  return file;
}

void write_score_file(const std::filesystem::path& path, const ScoreFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << format_score_file(file);
}

ScoreFile read_score_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open score file '{}'", path.string()));
  return parse_score_file(in, path.string());
}

}  // namespace cmconf::protocol
