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

#ifndef CMCONF_SCORE_IO_HPP_
#define CMCONF_SCORE_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cmconf/metrics.hpp"

namespace cmconf::protocol {

// Score file: "# key=value" header lines, then one trial per line:
//   id attack_tag class known s c
// with class bonafide|spoof, known known|unknown and "-" for an empty tag.
// Values are written in shortest round-trip form.
struct ScoreFile {
  std::map<std::string, std::string> header;
  std::vector<metrics::ScoreRecord> records;

  friend bool operator==(const ScoreFile&, const ScoreFile&) = default;
};

std::string format_score_file(const ScoreFile& file);
// Throws DataError naming the offending line.
ScoreFile parse_score_file(std::istream& in, const std::string& source_name);

void write_score_file(const std::filesystem::path& path, const ScoreFile& file);
ScoreFile read_score_file(const std::filesystem::path& path);

}  // namespace cmconf::protocol

#endif  // CMCONF_SCORE_IO_HPP_
