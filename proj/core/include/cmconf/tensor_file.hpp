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

#ifndef CMCONF_TENSOR_FILE_HPP_
#define CMCONF_TENSOR_FILE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cmconf {

// Binary layout, all integers little-endian:
//   "CMCFTNSR"  8-byte magic
//   u32         format version (kTensorFileVersion)
//   u32         tensor count
//   per tensor: u32 name length, name bytes, u32 rows, u32 cols
//   payload:    float32 values of every tensor, row-major, in table order
inline constexpr std::uint32_t kTensorFileVersion = 1;

struct NamedTensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

void write_tensor_file(const std::filesystem::path& path, std::span<const NamedTensor> tensors);

// Throws DataError on bad magic, unsupported version or truncation.
std::vector<NamedTensor> read_tensor_file(const std::filesystem::path& path);

// Rounds every value through float32, i.e. what a write/read cycle yields.
void round_to_float32(std::span<double> values);

// Sidecar manifest: one "key = value" per line, sorted by key.
using Manifest = std::map<std::string, std::string>;

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// "<path>.manifest"
std::filesystem::path manifest_path(const std::filesystem::path& tensor_file);

}  // namespace cmconf

#endif  // CMCONF_TENSOR_FILE_HPP_
