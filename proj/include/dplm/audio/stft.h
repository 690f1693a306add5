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

#ifndef DPLM_AUDIO_STFT_H_
#define DPLM_AUDIO_STFT_H_

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

// Feature channel layout.
enum FeatureChannel { kLogMagLeft = 0, kLogMagRight = 1, kPhaseLeft = 2,
                      kPhaseRight = 3, kNumFeatureChannels = 4 };

// Logical shape T x F x C. Stored channel-major (C planes of T x F) so that a
// channel plane is contiguous, which is the layout the convolution stack uses.
struct FeatureTensor {
  int frames = 0;
  int bins = 0;
  int channels = kNumFeatureChannels;
  std::vector<double> data;

  FeatureTensor() = default;
  FeatureTensor(int t, int f, int c = kNumFeatureChannels)
      : frames(t), bins(f), channels(c),
        data(static_cast<std::size_t>(t) * f * c, 0.0) {}

  double& at(int t, int f, int c) {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
  double at(int t, int f, int c) const {
    return data[(static_cast<std::size_t>(c) * frames + t) * bins + f];
  }
};

inline int NumFrames(std::size_t num_samples, int dft_size, int hop) {
  if (num_samples < static_cast<std::size_t>(dft_size)) return 0;
  return static_cast<int>((num_samples - dft_size) / hop) + 1;
}

// Center time of STFT frame `t`, in seconds.
inline double FrameCenterSec(int t, int dft_size, int hop, int sample_rate) {
  return (static_cast<double>(t) * hop + dft_size / 2.0) / sample_rate;
}

// Hann-windowed STFT front end producing log(1 + |X|) and principal phase per
// ear. Also provides the vector-Jacobian product back to the input samples.
class FeatureExtractor {
 public:
  using RowMatrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit FeatureExtractor(int dft_size = 512, int hop = 256)
      : dft_size_(dft_size), hop_(hop), bins_(dft_size / 2 + 1) {
    Require(dft_size > 0 && (dft_size & (dft_size - 1)) == 0,
            "dft_size must be a power of two");
    Require(hop > 0 && hop <= dft_size, "hop must be in (0, dft_size]");
    window_.resize(dft_size_);
    for (int n = 0; n < dft_size_; ++n) {
      window_[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / dft_size_);
    }
    cos_.resize(dft_size_, bins_);
    sin_.resize(dft_size_, bins_);
    for (int n = 0; n < dft_size_; ++n) {
      for (int k = 0; k < bins_; ++k) {
        // Reduce the index product first so large arguments stay exact.
        const long long idx = (static_cast<long long>(n) * k) % dft_size_;
        const double arg = 2.0 * kPi * static_cast<double>(idx) / dft_size_;
        cos_(n, k) = std::cos(arg);
        sin_(n, k) = -std::sin(arg);
      }
    }
  }

  int dft_size() const { return dft_size_; }
  int hop() const { return hop_; }
  int bins() const { return bins_; }

  FeatureTensor Extract(const BinauralSignal& x) const {
    Require(x.sample_rate() == kCanonicalSampleRate,
            "features require a 16 kHz signal");
    const int frames = NumFrames(x.size(), dft_size_, hop_);
    if (frames == 0) Fail(ErrorCode::kInvalidArgument, "signal too short");
    FeatureTensor out(frames, bins_);
    for (int ch = 0; ch < 2; ++ch) {
      RowMatrix re, im;
      Transform(x.channel(ch), frames, &re, &im);
      const int mag_c = ch == 0 ? kLogMagLeft : kLogMagRight;
      const int ph_c = ch == 0 ? kPhaseLeft : kPhaseRight;
      for (int t = 0; t < frames; ++t) {
        for (int k = 0; k < bins_; ++k) {
          const double r = re(t, k);
          const double i = im(t, k);
          const double m = std::hypot(r, i);
          out.at(t, k, mag_c) = std::log1p(m);
          double phase = m == 0.0 ? 0.0 : std::atan2(i, r);
          if (phase <= -kPi) phase = kPi;
          out.at(t, k, ph_c) = phase;
        }
      }
    }
    return out;
  }

  // Given dL/dfeatures, returns dL/dsamples for both channels. Bins with zero
  // magnitude contribute no gradient.
  BinauralSignal Backward(const BinauralSignal& x,
                          const FeatureTensor& grad) const {
    const int frames = NumFrames(x.size(), dft_size_, hop_);
    Require(frames == grad.frames && grad.bins == bins_,
            "feature gradient shape mismatch");
    std::vector<double> out[2];
    for (int ch = 0; ch < 2; ++ch) {
      RowMatrix re, im;
      Transform(x.channel(ch), frames, &re, &im);
      const int mag_c = ch == 0 ? kLogMagLeft : kLogMagRight;
      const int ph_c = ch == 0 ? kPhaseLeft : kPhaseRight;
      RowMatrix d_re(frames, bins_), d_im(frames, bins_);
      for (int t = 0; t < frames; ++t) {
        for (int k = 0; k < bins_; ++k) {
          const double r = re(t, k);
          const double i = im(t, k);
          const double m2 = r * r + i * i;
          if (m2 == 0.0) {
            d_re(t, k) = d_im(t, k) = 0.0;
            continue;
          }
          const double m = std::sqrt(m2);
          const double g_mag = grad.at(t, k, mag_c) / (m * (1.0 + m));
          const double g_ph = grad.at(t, k, ph_c) / m2;
          d_re(t, k) = g_mag * r - g_ph * i;
          d_im(t, k) = g_mag * i + g_ph * r;
        }
      }
      const RowMatrix d_frames =
          d_re * cos_.transpose() + d_im * sin_.transpose();
      std::vector<double>& dx = out[ch];
      dx.assign(x.size(), 0.0);
      for (int t = 0; t < frames; ++t) {
        const std::size_t offset = static_cast<std::size_t>(t) * hop_;
        for (int n = 0; n < dft_size_; ++n) {
          dx[offset + n] += d_frames(t, n) * window_[n];
        }
      }
    }
    return BinauralSignal(std::move(out[0]), std::move(out[1]),
                          x.sample_rate());
  }

 private:
  void Transform(const std::vector<double>& samples, int frames,
                 RowMatrix* re, RowMatrix* im) const {
    RowMatrix framed(frames, dft_size_);
    for (int t = 0; t < frames; ++t) {
      const std::size_t offset = static_cast<std::size_t>(t) * hop_;
      for (int n = 0; n < dft_size_; ++n) {
        framed(t, n) = samples[offset + n] * window_[n];
      }
    }
    *re = framed * cos_;
    *im = framed * sin_;
  }

  int dft_size_;
  int hop_;
  int bins_;
  std::vector<double> window_;
  RowMatrix cos_;
  RowMatrix sin_;  // holds -sin so that X = framed * (cos_ + i sin_)
};

inline FeatureTensor ExtractFeatures(const BinauralSignal& x,
                                     int dft_size = 512, int hop = 256) {
  return FeatureExtractor(dft_size, hop).Extract(x);
}

}  // namespace dplm

#endif  // DPLM_AUDIO_STFT_H_
