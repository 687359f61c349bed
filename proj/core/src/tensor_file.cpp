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

#include "cmconf/tensor_file.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "cmconf/errors.hpp"

namespace cmconf {
namespace {

constexpr char kMagic[8] = {'C', 'M', 'C', 'F', 'T', 'N', 'S', 'R'};

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string text(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw DataError(fmt::format("'{}': truncated tensor file", path_.string()));
    }
  }
  const std::vector<unsigned char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_tensor_file(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  std::string out(kMagic, sizeof(kMagic));
  put32(out, kTensorFileVersion);
  put32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.values.size() != t.rows * t.cols) {
      throw UsageError(fmt::format("tensor '{}' has {} values for shape {}x{}", t.name,
                                   t.values.size(), t.rows, t.cols));
    }
    put32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put32(out, static_cast<std::uint32_t>(t.rows));
    put32(out, static_cast<std::uint32_t>(t.cols));
  }
  for (const auto& t : tensors) {
    for (double v : t.values) put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError(fmt::format("cannot write '{}'", path.string()));
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<NamedTensor> read_tensor_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError(fmt::format("cannot open tensor file '{}'", path.string()));
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(file),
                                         std::istreambuf_iterator<char>()};
  Reader in(bytes, path);
  if (in.text(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw DataError(fmt::format("'{}': not a tensor file", path.string()));
  }
  const std::uint32_t version = in.u32();
  if (version != kTensorFileVersion) {
    throw DataError(fmt::format("'{}': unsupported tensor file version {}", path.string(),
                                version));
  }
  std::vector<NamedTensor> tensors(in.u32());
  for (auto& t : tensors) {
    t.name = in.text(in.u32());
    t.rows = in.u32();
    t.cols = in.u32();
  }
  for (auto& t : tensors) {
    t.values.resize(t.rows * t.cols);
    for (double& v : t.values) v = std::bit_cast<float>(in.u32());
  }
  if (in.remaining() != 0) {
    throw DataError(fmt::format("'{}': trailing bytes after payload", path.string()));
  }
  return tensors;
}

void round_to_float32(std::span<double> values) {
  for (double& v : values) v = static_cast<float>(v);
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& [key, value] : manifest) out << key << " = " << value << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open manifest '{}'", path.string()));
  Manifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      throw DataError(fmt::format("{}:{}: expected 'key = value'", path.string(), line_no));
    }
    manifest[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return manifest;
}

std::filesystem::path manifest_path(const std::filesystem::path& tensor_file) {
  auto p = tensor_file;
  p += ".manifest";
  return p;
}

}  // namespace cmconf
