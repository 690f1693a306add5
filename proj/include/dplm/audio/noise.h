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

#ifndef DPLM_AUDIO_NOISE_H_
#define DPLM_AUDIO_NOISE_H_

#include <cmath>
#include <limits>
#include <vector>

#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Linear gain applied to `noise` so that clean-to-noise power over both
// channels equals `snr_db`.
inline double NoiseGainForSnr(const BinauralSignal& clean,
                              const BinauralSignal& noise, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  const double p_clean = clean.Power();
  const double p_noise = noise.Power();
  if (p_clean == 0.0) Fail(ErrorCode::kInvalidArgument, "undefined SNR");
  if (p_noise == 0.0) {
    Fail(ErrorCode::kInvalidArgument, "noise signal is silent");
  }
  return std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
}

// Returns clean + g * noise. The caller loops or truncates noise beforehand.
inline BinauralSignal MixNoise(const BinauralSignal& clean,
                               const BinauralSignal& noise, double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return clean;
  Require(clean.size() == noise.size(),
          "clean and noise must have equal length");
  Require(clean.sample_rate() == noise.sample_rate(),
          "clean and noise must share a sample rate");
  const double gain = NoiseGainForSnr(clean, noise, snr_db);
  std::vector<double> left = clean.left();
  std::vector<double> right = clean.right();
  for (std::size_t i = 0; i < left.size(); ++i) {
    left[i] += gain * noise.left()[i];
    right[i] += gain * noise.right()[i];
  }
  return BinauralSignal(std::move(left), std::move(right),
                        clean.sample_rate());
}

// Repeats or truncates `noise` to exactly `length` samples.
inline BinauralSignal FitNoiseLength(const BinauralSignal& noise,
                                     std::size_t length) {
  Require(noise.size() > 0, "noise signal is empty");
  std::vector<double> left(length), right(length);
  for (std::size_t i = 0; i < length; ++i) {
    left[i] = noise.left()[i % noise.size()];
    right[i] = noise.right()[i % noise.size()];
  }
  return BinauralSignal(std::move(left), std::move(right),
                        noise.sample_rate());
}

}  // namespace dplm

#endif  // DPLM_AUDIO_NOISE_H_
