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

#ifndef CMCONF_WAV_IO_HPP_
#define CMCONF_WAV_IO_HPP_

#include <filesystem>

#include "cmconf/features.hpp"

namespace cmconf::features {

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a mono RIFF/WAVE file, PCM 16-bit or IEEE float32.
Waveform read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavEncoding encoding = WavEncoding::kFloat32);

// Headerless little-endian float32 samples.
Waveform read_raw_f32(const std::filesystem::path& path, int sample_rate = 16000);

// Dispatches on extension: ".wav" -> read_wav, anything else -> raw float32.
Waveform read_audio(const std::filesystem::path& path, int sample_rate = 16000);

}  // namespace cmconf::features

#endif  // CMCONF_WAV_IO_HPP_
