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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "cmconf/errors.hpp"
#include "cmconf/features.hpp"
#include "cmconf/rng.hpp"
#include "test_util.hpp"

namespace cmconf::features {
namespace {

Waveform sine(double hz, std::size_t n, double amp = 0.5, int sr = 16000) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr);
  }
  return w;
}

TEST(Framing, OneSecondGives99Frames) {
  LfccConfig cfg;
  Waveform w{std::vector<double>(16000, 0.0), 16000};
  EXPECT_EQ(frame_signal(w, cfg).size(), 99u);
  EXPECT_EQ(frame_count(16000, cfg), 99u);
}

TEST(Framing, ExactlyOneFrame) {
  LfccConfig cfg;
  Waveform w{std::vector<double>(320, 0.1), 16000};
  const auto frames = frame_signal(w, cfg);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].size(), 320u);
}

TEST(Framing, ShorterThanOneFrameThrows) {
  LfccConfig cfg;
  Waveform w{std::vector<double>(319, 0.1), 16000};
  EXPECT_THROW(frame_signal(w, cfg), DataError);
  EXPECT_THROW(lfcc(w, cfg), DataError);
}

TEST(Framing, HammingWindowApplied) {
  LfccConfig cfg;
  Waveform w{std::vector<double>(320, 1.0), 16000};
  const auto f = frame_signal(w, cfg)[0];
  EXPECT_NEAR(f[0], 0.08, 1e-12);
  EXPECT_NEAR(f[319], 0.08, 1e-12);
  EXPECT_NEAR(f[160], 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * 160 / 319), 1e-12);
}

TEST(Framing, FrameCountPropertyOverRandomLengths) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    LfccConfig cfg;
    cfg.frame_len = 16 + static_cast<int>(rng.below(300));
    cfg.fft_size = 512;
    cfg.frame_shift = 1 + static_cast<int>(rng.below(200));
    const std::size_t t = static_cast<std::size_t>(cfg.frame_len) + rng.below(5000);
    Waveform w{std::vector<double>(t, 0.0), 16000};
    const std::size_t expected =
        1 + static_cast<std::size_t>(std::floor(static_cast<double>(t - cfg.frame_len) /
                                                cfg.frame_shift));
    EXPECT_EQ(frame_signal(w, cfg).size(), expected) << "T=" << t;
  }
}

TEST(Config, RejectsInconsistentSizes) {
  LfccConfig cfg;
  cfg.frame_len = 600;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = {};
  cfg.n_ceps = 21;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = {};
  cfg.log_floor = 0.0;
  EXPECT_THROW(cfg.validate(), UsageError);
  EXPECT_NO_THROW(LfccConfig{}.validate());
}

TEST(Lfcc, SilenceGivesFloorCepstrum) {
  LfccConfig cfg;
  Waveform w{std::vector<double>(1600, 0.0), 16000};
  const auto c = lfcc(w, cfg);
  ASSERT_EQ(c.dim(), 20u);
  const double c0 = std::sqrt(20.0) * std::log(1e-10);
  for (std::size_t n = 0; n < c.n_frames(); ++n) {
    EXPECT_NEAR(c(n, 0), c0, 1e-9);
    for (std::size_t k = 1; k < 20; ++k) EXPECT_NEAR(c(n, k), 0.0, 1e-9);
  }
}

// Brute-force DFT power spectrum and triangular filter response.
std::vector<double> naive_log_energies(const std::vector<double>& frame, const LfccConfig& cfg,
                                       int sr) {
  const int n_bins = cfg.fft_size / 2 + 1;
  std::vector<double> power(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      acc += frame[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * static_cast<double>(i) /
                                            cfg.fft_size);
    }
    power[k] = std::norm(acc);
  }
  std::vector<double> out(cfg.n_filters);
  const double step = sr / 2.0 / (cfg.n_filters + 1);
  for (int f = 0; f < cfg.n_filters; ++f) {
    const double lo = step * f, mid = step * (f + 1), hi = step * (f + 2);
    double e = 0.0;
    for (int k = 0; k < n_bins; ++k) {
      const double hz = static_cast<double>(k) * sr / cfg.fft_size;
      double weight = 0.0;
      if (hz >= lo && hz <= mid) weight = (hz - lo) / (mid - lo);
      else if (hz > mid && hz <= hi) weight = (hi - hz) / (hi - mid);
      e += weight * power[k];
    }
    out[f] = std::log(std::max(e, cfg.log_floor));
  }
  return out;
}

TEST(Lfcc, FilterbankMatchesBruteForce) {
  LfccConfig cfg;
  Rng rng(3);
  Waveform w{testing::random_vector(rng, 800, -0.5, 0.5), 16000};
  const auto fast = log_filterbank_energies(w, cfg);
  const auto frames = frame_signal(w, cfg);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const auto slow = naive_log_energies(frames[n], cfg, 16000);
    for (int f = 0; f < cfg.n_filters; ++f) EXPECT_NEAR(fast(n, f), slow[f], 1e-9);
  }
}

TEST(Lfcc, SineAtFilterCenterDominatesNonAdjacentFilters) {
  LfccConfig cfg;
  const double step = 8000.0 / (cfg.n_filters + 1);
  for (int target : {2, 9, 15}) {
    const double center = step * (target + 1);
    const auto w = sine(center, 1600, 1.0);
    const auto e = log_filterbank_energies(w, cfg);
    const auto slow = naive_log_energies(frame_signal(w, cfg)[0], cfg, 16000);
    for (int f = 0; f < cfg.n_filters; ++f) {
      EXPECT_NEAR(e(0, f), slow[f], 1e-9);
      if (std::abs(f - target) <= 1) continue;
      for (std::size_t n = 0; n < e.n_frames(); ++n) {
        EXPECT_GT(e(n, target), e(n, f)) << "target " << target << " filter " << f;
      }
    }
  }
}

TEST(Lfcc, GainChangesOnlyC0) {
  LfccConfig cfg;
  Rng rng(11);
  Waveform w{testing::random_vector(rng, 2000, -0.3, 0.3), 16000};
  Waveform w2 = w;
  for (auto& s : w2.samples) s *= 2.0;
  const auto a = lfcc(w, cfg);
  const auto b = lfcc(w2, cfg);
  const double shift = std::sqrt(20.0) * std::log(4.0);
  for (std::size_t n = 0; n < a.n_frames(); ++n) {
    EXPECT_NEAR(b(n, 0) - a(n, 0), shift, 1e-9);
    for (std::size_t k = 1; k < 20; ++k) EXPECT_NEAR(b(n, k), a(n, k), 1e-9);
  }
}

TEST(Lfcc, OrthonormalDct) {
  std::vector<double> x = {1.0, -2.0, 0.5, 3.0};
  const auto c = dct2_orthonormal(x, 4);
  double ex = 0.0, ec = 0.0;
  for (double v : x) ex += v * v;
  for (double v : c) ec += v * v;
  EXPECT_NEAR(ex, ec, 1e-12);
  EXPECT_NEAR(c[0], 2.5 / 2.0, 1e-12);
}

TEST(Deltas, ConstantGivesZero) {
  FeatureMatrix f(7, 3);
  for (std::size_t n = 0; n < 7; ++n)
    for (std::size_t d = 0; d < 3; ++d) f(n, d) = 1.5 + d;
  const auto g = append_deltas(f);
  ASSERT_EQ(g.dim(), 9u);
  for (std::size_t n = 0; n < 7; ++n) {
    for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(g(n, d), f(n, d));
    for (std::size_t d = 3; d < 9; ++d) EXPECT_EQ(g(n, d), 0.0);
  }
}

TEST(Deltas, SingleFrameGivesZero) {
  FeatureMatrix f(1, 4);
  for (std::size_t d = 0; d < 4; ++d) f(0, d) = 0.25 * d - 1.0;
  const auto g = append_deltas(f);
  for (std::size_t d = 4; d < 12; ++d) EXPECT_EQ(g(0, d), 0.0);
}

TEST(Deltas, RampHasUnitSlopeInInterior) {
  const std::vector<double> v = {0.5, -1.0, 2.0};
  FeatureMatrix f(12, 3);
  for (std::size_t n = 0; n < 12; ++n)
    for (std::size_t d = 0; d < 3; ++d) f(n, d) = static_cast<double>(n) * v[d];
  const auto g = append_deltas(f);
  for (std::size_t n = 2; n + 2 < 12; ++n) {
    for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(g(n, 3 + d), v[d], 1e-12);
  }
  // delta-delta needs the deltas themselves to be interior.
  for (std::size_t n = 4; n + 4 < 12; ++n) {
    for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(g(n, 6 + d), 0.0, 1e-12);
  }
  // edges use replication: frame 0 sees f(-1) = f(-2) = f(0).
  EXPECT_NEAR(g(0, 3), (1.0 + 2.0 * 2.0) / 10.0 * v[0], 1e-12);
}

TEST(Extract, SixtyFiniteColumnsForAnyInput) {
  LfccConfig cfg;
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Waveform w;
    w.samples.resize(320 + rng.below(3000));
    const int mode = trial % 4;
    for (auto& s : w.samples) {
      s = mode == 0 ? 0.0 : mode == 1 ? rng.uniform(-1, 1) : mode == 2 ? 1.0 : 1e-12;
    }
    const auto f = extract(w, cfg);
    EXPECT_EQ(f.dim(), 60u);
    for (double x : f.data()) ASSERT_TRUE(std::isfinite(x));
    const auto pooled = mean_pool(f);
    EXPECT_EQ(pooled.size(), 60u);
  }
}

TEST(Extract, PureFunction) {
  LfccConfig cfg;
  Rng rng(9);
  Waveform w{testing::random_vector(rng, 4000), 16000};
  EXPECT_EQ(extract(w, cfg), extract(w, cfg));
}

TEST(Extract, MeanPoolAveragesFrames) {
  FeatureMatrix f(3, 2);
  f(0, 0) = 1; f(1, 0) = 2; f(2, 0) = 6;
  f(0, 1) = -3; f(1, 1) = 0; f(2, 1) = 0;
  const auto p = mean_pool(f);
  EXPECT_DOUBLE_EQ(p[0], 3.0);
  EXPECT_DOUBLE_EQ(p[1], -1.0);
}

}  // namespace
}  // namespace cmconf::features
