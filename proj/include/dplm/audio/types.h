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

#ifndef DPLM_AUDIO_TYPES_H_
#define DPLM_AUDIO_TYPES_H_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "dplm/core/error.h"

namespace dplm {

inline constexpr int kCanonicalSampleRate = 16000;
inline constexpr double kPi = std::numbers::pi;

inline double DegToRad(double deg) { return deg * kPi / 180.0; }
inline double RadToDeg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle into (-pi, pi].
inline double WrapAngle(double rad) {
  double wrapped = std::remainder(rad, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

struct MonoSignal {
  std::vector<double> samples;
  int sample_rate = kCanonicalSampleRate;

  std::size_t size() const { return samples.size(); }
};

// Two-channel PCM audio. Both channels always have the same length.
class BinauralSignal {
 public:
  BinauralSignal() = default;
  BinauralSignal(std::vector<double> left, std::vector<double> right,
                 int sample_rate = kCanonicalSampleRate)
      : left_(std::move(left)),
        right_(std::move(right)),
        sample_rate_(sample_rate) {
    Require(left_.size() == right_.size(),
            "binaural channels must have equal length");
    Require(sample_rate_ > 0, "sample rate must be positive");
    for (std::size_t i = 0; i < left_.size(); ++i) {
      Require(std::isfinite(left_[i]) && std::isfinite(right_[i]),
              "binaural samples must be finite");
    }
  }

  static BinauralSignal Zeros(std::size_t n,
                              int sample_rate = kCanonicalSampleRate) {
    return BinauralSignal(std::vector<double>(n, 0.0),
                          std::vector<double>(n, 0.0), sample_rate);
  }

  const std::vector<double>& left() const { return left_; }
  const std::vector<double>& right() const { return right_; }
  const std::vector<double>& channel(int ch) const {
    return ch == 0 ? left_ : right_;
  }
  int sample_rate() const { return sample_rate_; }
  std::size_t size() const { return left_.size(); }
  double duration_sec() const {
    return static_cast<double>(size()) / sample_rate_;
  }

  // Returns samples [begin, end) of both channels.
  BinauralSignal Slice(std::size_t begin, std::size_t end) const {
    Require(begin <= end && end <= size(), "slice out of range");
    return BinauralSignal(
        std::vector<double>(left_.begin() + begin, left_.begin() + end),
        std::vector<double>(right_.begin() + begin, right_.begin() + end),
        sample_rate_);
  }

  BinauralSignal Swapped() const {
    return BinauralSignal(right_, left_, sample_rate_);
  }

  // Mean power over both channels.
  double Power() const {
    if (left_.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < left_.size(); ++i) {
      acc += left_[i] * left_[i] + right_[i] * right_[i];
    }
    return acc / (2.0 * left_.size());
  }

  friend bool operator==(const BinauralSignal&,
                         const BinauralSignal&) = default;

 private:
  std::vector<double> left_;
  std::vector<double> right_;
  int sample_rate_ = kCanonicalSampleRate;
};

// Direction of a source. Azimuth is counterclockwise seen from above (positive
// = towards the left ear) and normalized into (-pi, pi]; elevation is clamped
// into [-pi/2, pi/2].
class SourceLocation {
 public:
  SourceLocation() = default;
  SourceLocation(double azimuth, double elevation = 0.0)
      : azimuth_(WrapAngle(azimuth)),
        elevation_(std::clamp(elevation, -kPi / 2, kPi / 2)) {}

  static SourceLocation FromDegrees(double azimuth_deg,
                                    double elevation_deg = 0.0) {
    return SourceLocation(DegToRad(azimuth_deg), DegToRad(elevation_deg));
  }

  double azimuth() const { return azimuth_; }
  double elevation() const { return elevation_; }
  double azimuth_deg() const { return RadToDeg(azimuth_); }
  double elevation_deg() const { return RadToDeg(elevation_); }

  friend bool operator==(const SourceLocation&,
                         const SourceLocation&) = default;

 private:
  double azimuth_ = 0.0;
  double elevation_ = 0.0;
};

struct Keyframe {
  double time_sec = 0.0;
  SourceLocation location;
};

// Keyframed source path. Times strictly increase and lie in [0, duration].
class Trajectory {
 public:
  Trajectory(std::vector<Keyframe> keyframes, double duration_sec)
      : keyframes_(std::move(keyframes)), duration_sec_(duration_sec) {
    Require(!keyframes_.empty(), "trajectory must have at least one keyframe");
    Require(duration_sec_ >= 0.0, "trajectory duration must be nonnegative");
    for (std::size_t i = 0; i < keyframes_.size(); ++i) {
      const double t = keyframes_[i].time_sec;
      Require(t >= 0.0 && t <= duration_sec_,
              "trajectory keyframe time outside [0, duration]");
      if (i > 0) {
        Require(t > keyframes_[i - 1].time_sec,
                "trajectory keyframe times must strictly increase");
      }
    }
  }

  static Trajectory Static(const SourceLocation& loc, double duration_sec) {
    return Trajectory({{0.0, loc}}, duration_sec);
  }

  const std::vector<Keyframe>& keyframes() const { return keyframes_; }
  double duration_sec() const { return duration_sec_; }

 private:
  std::vector<Keyframe> keyframes_;
  double duration_sec_;
};

// Equally spaced azimuth/elevation classes with half-open bins.
struct BinGrid {
  int n_azimuth = 50;
  int n_elevation = 25;

  double azimuth_width() const { return 2.0 * kPi / n_azimuth; }
  double elevation_width() const { return kPi / n_elevation; }
  double azimuth_center(int bin) const {
    return -kPi + azimuth_width() * (bin + 0.5);
  }
  double elevation_center(int bin) const {
    return -kPi / 2 + elevation_width() * (bin + 0.5);
  }

  friend bool operator==(const BinGrid&, const BinGrid&) = default;
};

struct Brir {
  std::vector<double> left;
  std::vector<double> right;
  SourceLocation source_location;
  std::string room_id;
  int sample_rate = kCanonicalSampleRate;
};

}  // namespace dplm

#endif  // DPLM_AUDIO_TYPES_H_
