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

#include "cmconf/wav_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cmconf/errors.hpp"

namespace cmconf::features {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open audio file '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

float f32_from_le(const unsigned char* p) { return std::bit_cast<float>(le32(p)); }

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const auto bad = [&](const std::string& why) {
    return DataError(fmt::format("'{}': {}", path.string(), why));
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw bad("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    if (pos + 8 + size > bytes.size()) throw bad("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw bad("short fmt chunk");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == kFormatExtensible && size >= 40) format = le16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = size;
    }
    pos += 8 + size + (size & 1);
  }
  if (format == 0) throw bad("missing fmt chunk");
  if (data == nullptr) throw bad("missing data chunk");
  if (channels != 1) throw bad(fmt::format("expected mono, got {} channels", channels));

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  if (format == kFormatPcm && bits == 16) {
    w.samples.resize(data_size / 2);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i] = static_cast<std::int16_t>(le16(data + 2 * i)) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    w.samples.resize(data_size / 4);
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      w.samples[i] = f32_from_le(data + 4 * i);
    }
  } else {
    throw bad(fmt::format("unsupported encoding (format {}, {} bits)", format, bits));
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w, WavEncoding encoding) {
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(w.samples.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, pcm ? kFormatPcm : kFormatFloat);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(w.sample_rate));
  put32(out, static_cast<std::uint32_t>(w.sample_rate) * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  out += "data";
  put32(out, data_size);
  for (double v : w.samples) {
    if (pcm) {
      const double clipped = std::clamp(v, -1.0, 1.0);
      put16(out, static_cast<std::uint16_t>(
                     static_cast<std::int16_t>(std::lround(clipped * 32767.0))));
    } else {
      put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError(fmt::format("cannot write '{}'", path.string()));
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Waveform read_raw_f32(const std::filesystem::path& path, int sample_rate) {
  const auto bytes = slurp(path);
  if (bytes.size() % 4 != 0) {
    throw DataError(fmt::format("'{}': raw float32 size {} is not a multiple of 4",
                                path.string(), bytes.size()));
  }
  Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(bytes.size() / 4);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = f32_from_le(bytes.data() + 4 * i);
  }
  return w;
}

Waveform read_audio(const std::filesystem::path& path, int sample_rate) {
  if (path.extension() == ".wav") return read_wav(path);
  return read_raw_f32(path, sample_rate);
}

}  // namespace cmconf::features
