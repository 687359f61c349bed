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

#ifndef CMCONF_FEATURES_HPP_
#define CMCONF_FEATURES_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace cmconf::features {

struct Waveform {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate = 16000;
};

struct LfccConfig {
  int frame_len = 320;    // 20 ms at 16 kHz
  int frame_shift = 160;  // 10 ms at 16 kHz
  int fft_size = 512;
  int n_filters = 20;
  int n_ceps = 20;
  double log_floor = 1e-10;

  // Throws UsageError when the configuration is inconsistent.
  void validate() const;
};

// Row-major N x D matrix of per-frame features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_frames, std::size_t dim)
      : n_frames_(n_frames), dim_(dim), data_(n_frames * dim, 0.0) {}

  std::size_t n_frames() const { return n_frames_; }
  std::size_t dim() const { return dim_; }

  std::span<double> frame(std::size_t n) { return {data_.data() + n * dim_, dim_}; }
  std::span<const double> frame(std::size_t n) const {
    return {data_.data() + n * dim_, dim_};
  }
  double& operator()(std::size_t n, std::size_t d) { return data_[n * dim_ + d]; }
  double operator()(std::size_t n, std::size_t d) const { return data_[n * dim_ + d]; }

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t n_frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Number of frames produced for a signal of `length` samples; 0 if the signal
// is shorter than one frame.
std::size_t frame_count(std::size_t length, const LfccConfig& cfg);

// Splits the waveform into Hamming-windowed frames of cfg.frame_len samples.
// Throws DataError if the signal is shorter than one frame.
std::vector<std::vector<double>> frame_signal(const Waveform& w, const LfccConfig& cfg);

// Triangular filterbank with linearly spaced centres over [0, Nyquist];
// row f holds the weights of filter f over the fft_size/2 + 1 power bins.
std::vector<std::vector<double>> linear_filterbank(const LfccConfig& cfg, int sample_rate);

// Log filterbank energies, one row of n_filters values per frame.
FeatureMatrix log_filterbank_energies(const Waveform& w, const LfccConfig& cfg);

// Orthonormal DCT-II of `x`, keeping the first n_out coefficients.
std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t n_out);

// Static LFCCs, N x n_ceps.
FeatureMatrix lfcc(const Waveform& w, const LfccConfig& cfg);

// Appends delta and delta-delta coefficients (regression window 2, edge frames
// replicated): N x D -> N x 3D.
FeatureMatrix append_deltas(const FeatureMatrix& f);

// lfcc followed by append_deltas: N x 60 at default settings.
FeatureMatrix extract(const Waveform& w, const LfccConfig& cfg);

// Mean over frames.
std::vector<double> mean_pool(const FeatureMatrix& f);

}  // namespace cmconf::features

#endif  // CMCONF_FEATURES_HPP_
