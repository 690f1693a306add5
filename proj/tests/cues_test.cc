// Copyright 2026 The DPLM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <chrono>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "dplm/audio/spatialize.h"
#include "dplm/audio/synth.h"
#include "dplm/cues/cues.h"
#include "dplm/core/random.h"
#include "gtest/gtest.h"

namespace dplm {
namespace {

constexpr int kRate = 16000;

std::vector<double> Noise(std::uint64_t seed, std::size_t n, double scale = 0.1) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& s : v) s = scale * rng.Normal();
  return v;
}

// Circular delay by `d` samples through an exact linear phase.
std::vector<double> CircularDelay(const std::vector<double>& x, double d) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, x);
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double f = k <= n / 2 ? static_cast<double>(k)
                                : static_cast<double>(k) - static_cast<double>(n);
    spectrum[k] *= std::polar(1.0, -2.0 * std::numbers::pi * f * d / n);
  }
  if (n % 2 == 0) spectrum[n / 2] = spectrum[n / 2].real();
  std::vector<double> y;
  fft.inv(y, spectrum);
  return y;
}

CueSummary Summary(const BinauralSignal& x) {
  return SummarizeCues(ExtractCues(x));
}

TEST(CuesTest, DioticSignalHasZeroCues) {
  const auto s = Noise(1, kRate);
  const auto frames = ExtractCues(BinauralSignal(s, s));
  ASSERT_EQ(frames.size(), 30u);
  EXPECT_NEAR(SummarizeCues(frames).itd_s * kRate, 0.0, 1e-3);
  for (const auto& f : frames) {
    EXPECT_NEAR(f.itd_s * kRate, 0.0, 0.02);
    EXPECT_NEAR(f.ild_db, 0.0, 1e-12);
    EXPECT_NEAR(f.iacc, 1.0, 1e-12);
  }
}

TEST(CuesTest, IntegerDelaysWithinOneSample) {
  const auto s = Noise(2, kRate);
  for (int d : {-16, -8, -3, -1, 1, 3, 8, 16}) {
    const auto delayed = CircularDelay(s, std::abs(d));
    // Positive d delays the right ear, so the left ear leads.
    const BinauralSignal x = d > 0 ? BinauralSignal(s, delayed)
                                   : BinauralSignal(delayed, s);
    const double itd = Summary(x).itd_s * kRate;
    EXPECT_NEAR(itd, d, 1.0) << "delay " << d;
    EXPECT_NEAR(itd, d, 1e-3) << "delay " << d;
  }
}

TEST(CuesTest, EightSampleDelayIs500Microseconds) {
  const auto s = Noise(3, kRate);
  const double itd = Summary(BinauralSignal(s, CircularDelay(s, 8))).itd_s;
  EXPECT_NEAR(itd, 500e-6, 1.0 / kRate);
}

TEST(CuesTest, FractionalDelaysWithinFiftiethOfASample) {
  const auto s = Noise(4, kRate);
  std::vector<double> delays = {0.25, 0.5, 0.75, 2.3, 5.6, -1.4, -7.5, -12.1};
  for (double d = -15.9; d < 16.0; d += 0.37) delays.push_back(d);
  for (double d : delays) {
    const auto delayed = CircularDelay(s, std::abs(d));
    const BinauralSignal x = d > 0 ? BinauralSignal(s, delayed)
                                   : BinauralSignal(delayed, s);
    EXPECT_NEAR(Summary(x).itd_s * kRate, d, 0.02) << "delay " << d;
  }
}

TEST(CuesTest, HalfAmplitudeIsSixDecibels) {
  const auto s = Noise(5, kRate);
  std::vector<double> half(s);
  for (auto& v : half) v *= 0.5;
  const double expect = 20.0 * std::log10(2.0);  // 6.0206
  EXPECT_NEAR(Summary(BinauralSignal(s, half)).ild_db, expect, 0.01);
  EXPECT_NEAR(Summary(BinauralSignal(half, s)).ild_db, -expect, 0.01);
  for (const auto& f : ExtractCues(BinauralSignal(s, half))) {
    EXPECT_NEAR(f.ild_db, expect, 1e-9);
  }
}

TEST(CuesTest, IaccDropsWithIndependentNoise) {
  const auto s = Noise(6, kRate);
  EXPECT_NEAR(Summary(BinauralSignal(s, s)).iacc, 1.0, 1e-12);
  const auto n = Noise(7, kRate);
  std::vector<double> mixed(s);
  for (std::size_t i = 0; i < s.size(); ++i) mixed[i] += n[i];
  const double partly = Summary(BinauralSignal(s, mixed)).iacc;
  const double independent = Summary(BinauralSignal(s, n)).iacc;
  EXPECT_LT(partly, 0.9);
  EXPECT_GT(partly, 0.5);  // 1/sqrt(2) in expectation
  EXPECT_LT(independent, 0.2);
  EXPECT_GE(independent, 0.0);
}

TEST(CuesTest, SilenceIsSkipped) {
  const std::vector<double> zero(kRate, 0.0);
  EXPECT_TRUE(ExtractCues(BinauralSignal(zero, zero)).empty());
  const CueSummary s = Summary(BinauralSignal(zero, zero));
  EXPECT_TRUE(s.silent);
  EXPECT_EQ(s.itd_s, 0.0);

  // Quiet first half (-80 dBFS), loud second half.
  auto x = Noise(8, kRate, 1e-4);
  const auto loud = Noise(9, kRate / 2);
  std::copy(loud.begin(), loud.end(), x.begin() + kRate / 2);
  const auto frames = ExtractCues(BinauralSignal(x, x));
  ASSERT_FALSE(frames.empty());
  EXPECT_EQ(frames.front().frame_index, 14);  // first frame reaching sample 8000
  EXPECT_LT(frames.size(), 30u);
}

TEST(CuesTest, OneSilentEarGivesFiniteIld) {
  const auto s = Noise(10, kRate);
  const std::vector<double> zero(kRate, 0.0);
  const CueSummary c = Summary(BinauralSignal(s, zero));
  EXPECT_TRUE(std::isfinite(c.ild_db));
  EXPECT_GT(c.ild_db, 100.0);
  EXPECT_EQ(c.iacc, 0.0);
}

TEST(CuesTest, ConfigValidation) {
  const BinauralSignal x(Noise(11, 4096), Noise(12, 4096));
  CueConfig cfg;
  cfg.frame_len = 16;  // shorter than twice the 16-sample maximum lag
  EXPECT_THROW(ExtractCues(x, cfg), Error);
  cfg = {};
  cfg.hop = 0;
  EXPECT_THROW(ExtractCues(x, cfg), Error);
}

TEST(CuesTest, MedianHandlesEvenAndOdd) {
  EXPECT_EQ(internal::Median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(internal::Median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_EQ(internal::Median({7.0}), 7.0);
}

TEST(CueDistanceTest, WeightedNormalizedSum) {
  const CueSummary a{0.5e-3, 6.0, 0.9, false};
  const CueSummary b{-0.5e-3, -4.0, 0.6, false};
  EXPECT_NEAR(CueDistance(a, b), (1.0 + 0.5 + 0.3) / 3.0, 1e-12);
  EXPECT_EQ(CueDistance(a, a), 0.0);
  EXPECT_EQ(CueDistance(a, b), CueDistance(b, a));
}

TEST(CueDistanceTest, SilentSignals) {
  const CueSummary silent;
  const CueSummary a{0.2e-3, 2.0, 0.8, false};
  EXPECT_GT(CueDistance(silent, a), 0.0);
  EXPECT_THROW(CueDistance(silent, silent), Error);
}

TEST(CueDistanceTest, GrowsWithAzimuthSeparation) {
  const auto src = SynthesizeSource(13, kRate);
  auto at = [&](double az) {
    return SpatializeParametric(src, SourceLocation::FromDegrees(az));
  };
  const auto ref = at(0);
  EXPECT_GT(CueDistance(ref, at(60)), CueDistance(ref, at(10)));
  EXPECT_GT(CueDistance(ref, at(10)), 0.0);
}

TEST(CuesTest, RuntimeOnTenSeconds) {
  const auto t0 = std::chrono::steady_clock::now();
  const BinauralSignal x(Noise(14, 10 * kRate), Noise(15, 10 * kRate));
  const auto frames = ExtractCues(x);
  const double sec = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  EXPECT_EQ(frames.size(), 311u);
  EXPECT_LT(sec, 10.0);
}

}  // namespace
}  // namespace dplm
