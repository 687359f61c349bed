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

#include "cmconf/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include <fmt/format.h>

#include "cmconf/errors.hpp"

namespace cmconf::features {
namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

// FFTW's planner is not thread-safe but executing a plan is, so plans are
// created once per size under a lock and shared.
fftw_plan r2c_plan(int n) {
  static std::mutex mutex;
  static std::map<int, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  FftwBuffer<double> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  FftwBuffer<fftw_complex> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
  plans.emplace(n, plan);
  return plan;
}

std::vector<double> hamming(int n) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  for (int i = 0; i < n; ++i) w[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * i / (n - 1));
  return w;
}

}  // namespace

void LfccConfig::validate() const {
  if (frame_len <= 0 || frame_shift <= 0 || fft_size <= 0 || n_filters <= 0 ||
      n_ceps <= 0) {
    throw UsageError("LFCC config: sizes must be positive");
  }
  if (frame_len > fft_size) {
    throw UsageError(fmt::format("LFCC config: frame_len {} exceeds fft_size {}",
                                 frame_len, fft_size));
  }
  if (n_ceps > n_filters) {
    throw UsageError(fmt::format("LFCC config: n_ceps {} exceeds n_filters {}", n_ceps,
                                 n_filters));
  }
  if (!(log_floor > 0.0)) throw UsageError("LFCC config: log_floor must be positive");
}

std::size_t frame_count(std::size_t length, const LfccConfig& cfg) {
  const auto len = static_cast<std::size_t>(cfg.frame_len);
  if (length < len) return 0;
  return 1 + (length - len) / static_cast<std::size_t>(cfg.frame_shift);
}

std::vector<std::vector<double>> frame_signal(const Waveform& w, const LfccConfig& cfg) {
  cfg.validate();
  if (w.sample_rate <= 0) throw UsageError("waveform sample_rate must be positive");
  const std::size_t n = frame_count(w.samples.size(), cfg);
  if (n == 0) {
    throw DataError(fmt::format("signal of {} samples is shorter than one frame ({})",
                                w.samples.size(), cfg.frame_len));
  }
  const auto window = hamming(cfg.frame_len);
  std::vector<std::vector<double>> frames(n, std::vector<double>(cfg.frame_len));
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t start = f * static_cast<std::size_t>(cfg.frame_shift);
    for (int i = 0; i < cfg.frame_len; ++i) {
      frames[f][i] = w.samples[start + i] * window[i];
    }
  }
  return frames;
}

std::vector<std::vector<double>> linear_filterbank(const LfccConfig& cfg, int sample_rate) {
  const int n_bins = cfg.fft_size / 2 + 1;
  const double nyquist = sample_rate / 2.0;
  std::vector<double> edges(cfg.n_filters + 2);
  for (int i = 0; i < cfg.n_filters + 2; ++i) {
    edges[i] = nyquist * i / (cfg.n_filters + 1);
  }
  std::vector<std::vector<double>> bank(cfg.n_filters, std::vector<double>(n_bins, 0.0));
  for (int f = 0; f < cfg.n_filters; ++f) {
    const double lo = edges[f];
    const double mid = edges[f + 1];
    const double hi = edges[f + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate / cfg.fft_size;
      if (hz >= lo && hz <= mid) {
        bank[f][k] = (hz - lo) / (mid - lo);
      } else if (hz > mid && hz <= hi) {
        bank[f][k] = (hi - hz) / (hi - mid);
      }
    }
  }
  return bank;
}

FeatureMatrix log_filterbank_energies(const Waveform& w, const LfccConfig& cfg) {
  const auto frames = frame_signal(w, cfg);
  const auto bank = linear_filterbank(cfg, w.sample_rate);
  const int n_bins = cfg.fft_size / 2 + 1;

  fftw_plan plan = r2c_plan(cfg.fft_size);
  FftwBuffer<double> in(static_cast<double*>(fftw_malloc(sizeof(double) * cfg.fft_size)));
  FftwBuffer<fftw_complex> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_bins)));
  std::vector<double> power(n_bins);

  FeatureMatrix energies(frames.size(), static_cast<std::size_t>(cfg.n_filters));
  for (std::size_t n = 0; n < frames.size(); ++n) {
    std::fill(in.get(), in.get() + cfg.fft_size, 0.0);
    std::copy(frames[n].begin(), frames[n].end(), in.get());
    fftw_execute_dft_r2c(plan, in.get(), out.get());
    for (int k = 0; k < n_bins; ++k) {
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    for (int f = 0; f < cfg.n_filters; ++f) {
      double e = 0.0;
      for (int k = 0; k < n_bins; ++k) e += bank[f][k] * power[k];
      energies(n, f) = std::log(std::max(e, cfg.log_floor));
    }
  }
  return energies;
}

std::vector<double> dct2_orthonormal(std::span<const double> x, std::size_t n_out) {
  const std::size_t n = x.size();
  std::vector<double> c(n_out, 0.0);
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(M_PI * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * n));
    }
    c[k] = acc * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return c;
}

FeatureMatrix lfcc(const Waveform& w, const LfccConfig& cfg) {
  const FeatureMatrix energies = log_filterbank_energies(w, cfg);
  FeatureMatrix ceps(energies.n_frames(), static_cast<std::size_t>(cfg.n_ceps));
  for (std::size_t n = 0; n < energies.n_frames(); ++n) {
    const auto c = dct2_orthonormal(energies.frame(n), ceps.dim());
    std::copy(c.begin(), c.end(), ceps.frame(n).begin());
  }
  return ceps;
}

namespace {

FeatureMatrix regression_delta(const FeatureMatrix& f) {
  constexpr int kWidth = 2;
  constexpr double kNorm = 2.0 * (1 * 1 + 2 * 2);
  const auto n_frames = static_cast<std::ptrdiff_t>(f.n_frames());
  const auto clamp = [n_frames](std::ptrdiff_t i) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n_frames - 1));
  };
  FeatureMatrix d(f.n_frames(), f.dim());
  for (std::ptrdiff_t n = 0; n < n_frames; ++n) {
    for (std::size_t j = 0; j < f.dim(); ++j) {
      double acc = 0.0;
      for (int t = 1; t <= kWidth; ++t) {
        acc += t * (f(clamp(n + t), j) - f(clamp(n - t), j));
      }
      d(static_cast<std::size_t>(n), j) = acc / kNorm;
    }
  }
  return d;
}

}  // namespace

FeatureMatrix append_deltas(const FeatureMatrix& f) {
  if (f.n_frames() == 0) throw DataError("append_deltas: empty feature matrix");
  const FeatureMatrix delta = regression_delta(f);
  const FeatureMatrix delta2 = regression_delta(delta);
  const std::size_t d = f.dim();
  FeatureMatrix out(f.n_frames(), 3 * d);
  for (std::size_t n = 0; n < f.n_frames(); ++n) {
    for (std::size_t j = 0; j < d; ++j) {
      out(n, j) = f(n, j);
      out(n, d + j) = delta(n, j);
      out(n, 2 * d + j) = delta2(n, j);
    }
  }
  return out;
}

FeatureMatrix extract(const Waveform& w, const LfccConfig& cfg) {
  return append_deltas(lfcc(w, cfg));
}

std::vector<double> mean_pool(const FeatureMatrix& f) {
  if (f.n_frames() == 0) throw DataError("mean_pool: empty feature matrix");
  std::vector<double> mean(f.dim(), 0.0);
  for (std::size_t n = 0; n < f.n_frames(); ++n) {
    for (std::size_t j = 0; j < f.dim(); ++j) mean[j] += f(n, j);
  }
  for (auto& v : mean) v /= static_cast<double>(f.n_frames());
  return mean;
}

}  // namespace cmconf::features
