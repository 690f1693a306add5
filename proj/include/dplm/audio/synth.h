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

#ifndef DPLM_AUDIO_SYNTH_H_
#define DPLM_AUDIO_SYNTH_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dplm/audio/spatialize.h"
#include "dplm/audio/types.h"
#include "dplm/core/random.h"

namespace dplm {

// Speech-like test source: a gliding harmonic complex with a random spectral
// tilt, syllable-rate amplitude modulation and a breath-noise component.
// Peak-normalized to 0.5.
inline MonoSignal SynthesizeSource(std::uint64_t seed, std::size_t num_samples,
                                   int sample_rate = kCanonicalSampleRate) {
  Rng rng(seed);
  const double f0 = rng.Uniform(90.0, 260.0);
  const double glide = rng.Uniform(-0.25, 0.25);  // octaves per second
  const double vibrato_rate = rng.Uniform(3.0, 7.0);
  const double tilt = rng.Uniform(0.5, 1.2);
  const double syllable_rate = rng.Uniform(3.0, 6.0);
  const double syllable_phase = rng.Uniform(0.0, 2.0 * kPi);
  const double noise_level = rng.Uniform(0.05, 0.25);
  const double nyquist_guard = 0.45 * sample_rate;

  std::vector<double> harmonic_phase(64);
  for (double& p : harmonic_phase) p = rng.Uniform(0.0, 2.0 * kPi);

  MonoSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(num_samples);
  double phase = 0.0;
  double pink = 0.0;
  for (std::size_t n = 0; n < num_samples; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    const double f = f0 * std::pow(2.0, glide * t) *
                     (1.0 + 0.02 * std::sin(2.0 * kPi * vibrato_rate * t));
    phase += 2.0 * kPi * f / sample_rate;
    double voiced = 0.0;
    for (int h = 1; h <= 64 && h * f < nyquist_guard; ++h) {
      voiced += std::sin(h * phase + harmonic_phase[h - 1]) /
                std::pow(static_cast<double>(h), tilt);
    }
    pink = 0.9 * pink + 0.1 * rng.Normal();
    const double breath = noise_level * (0.5 * rng.Normal() + 2.0 * pink);
    const double envelope =
        0.15 + 0.85 * std::abs(std::sin(kPi * syllable_rate * t +
                                         syllable_phase));
    out.samples[n] = envelope * (voiced + breath);
  }
  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : out.samples) v *= 0.5 / peak;
  }
  return out;
}

// Background noise made of three independent noise sources rendered at random
// directions around the head.
inline BinauralSignal SynthesizeSpatialNoise(
    std::uint64_t seed, std::size_t num_samples,
    int sample_rate = kCanonicalSampleRate) {
  Rng rng(seed);
  std::vector<double> left(num_samples, 0.0), right(num_samples, 0.0);
  for (int source = 0; source < 3; ++source) {
    const double smoothing = rng.Uniform(0.0, 0.95);
    MonoSignal mono;
    mono.sample_rate = sample_rate;
    mono.samples.resize(num_samples);
    double state = 0.0;
    for (double& v : mono.samples) {
      state = smoothing * state + (1.0 - smoothing) * rng.Normal();
      v = state;
    }
    const SourceLocation loc(rng.Uniform(-kPi, kPi));
    const BinauralSignal rendered = SpatializeParametric(mono, loc);
    for (std::size_t n = 0; n < num_samples; ++n) {
      left[n] += rendered.left()[n];
      right[n] += rendered.right()[n];
    }
  }
  return BinauralSignal(std::move(left), std::move(right), sample_rate);
}

}  // namespace dplm

#endif  // DPLM_AUDIO_SYNTH_H_
