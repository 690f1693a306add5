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

#ifndef DPLM_AUDIO_SPATIALIZE_H_
#define DPLM_AUDIO_SPATIALIZE_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "dplm/audio/angles.h"
#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

// Full linear convolution of `x` with `h`, truncated to x.size().
inline std::vector<double> ConvolveTruncated(const std::vector<double>& x,
                                             const std::vector<double>& h) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  if (n == 0 || h.empty()) return y;
  const std::size_t taps = std::min(h.size(), n);
  if (taps <= 64) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t kmax = std::min(taps - 1, i);
      double acc = 0.0;
      for (std::size_t k = 0; k <= kmax; ++k) acc += h[k] * x[i - k];
      y[i] = acc;
    }
    return y;
  }
  std::size_t size = 1;
  while (size < n + taps - 1) size <<= 1;
  std::vector<double> xp(size, 0.0), hp(size, 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  std::copy(h.begin(), h.begin() + taps, hp.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> xf, hf;
  fft.fwd(xf, xp);
  fft.fwd(hf, hp);
  for (std::size_t i = 0; i < xf.size(); ++i) xf[i] *= hf[i];
  std::vector<double> full;
  fft.inv(full, xf);
  std::copy(full.begin(), full.begin() + n, y.begin());
  return y;
}

// Convolves a mono source with both channels of a BRIR. The result keeps the
// source length and is rescaled to a 0.99 peak only if it would clip.
inline BinauralSignal SpatializeBrir(const MonoSignal& src, const Brir& brir) {
  if (src.sample_rate != brir.sample_rate) {
    Fail(ErrorCode::kInvalidArgument,
         "source and BRIR sample rates differ");
  }
  Require(!brir.left.empty() && brir.left.size() == brir.right.size(),
          "BRIR channels must be nonempty and of equal length");
  std::vector<double> left = ConvolveTruncated(src.samples, brir.left);
  std::vector<double> right = ConvolveTruncated(src.samples, brir.right);
  double peak = 0.0;
  for (std::size_t i = 0; i < left.size(); ++i) {
    peak = std::max({peak, std::abs(left[i]), std::abs(right[i])});
  }
  if (peak > 1.0) {
    const double gain = 0.99 / peak;
    for (double& v : left) v *= gain;
    for (double& v : right) v *= gain;
  }
  return BinauralSignal(std::move(left), std::move(right), src.sample_rate);
}

// Spherical-head renderer: far-ear delay from the Woodworth ITD formula and a
// first-order high-shelf head-shadow filter on the far ear.
struct HeadModel {
  double head_radius = 0.0875;     // m
  double speed_of_sound = 343.0;   // m/s
  double max_shadow_db = 20.0;     // high-frequency far-ear loss at 90 deg
};

inline constexpr int kFractionalDelaySteps = 64;  // per sample
inline constexpr int kFractionalDelayHalfTaps = 16;

// Signed angle between the source and the median plane. Front and back
// directions with the same lateral angle render identically.
inline double LateralAngle(const SourceLocation& loc) {
  return std::asin(std::clamp(
      std::sin(loc.azimuth()) * std::cos(loc.elevation()), -1.0, 1.0));
}

// Positive when the left ear leads.
inline double ParametricItdSeconds(const SourceLocation& loc,
                                   const HeadModel& head = {}) {
  const double lat = LateralAngle(loc);
  const double mag = std::abs(lat);
  return std::copysign(
      head.head_radius / head.speed_of_sound * (mag + std::sin(mag)), lat);
}

namespace internal {

// Windowed-sinc fractional delay kernels on a 1/kFractionalDelaySteps grid.
class FractionalDelayBank {
 public:
  FractionalDelayBank() {
    for (int s = 0; s < kFractionalDelaySteps; ++s) {
      const double frac = static_cast<double>(s) / kFractionalDelaySteps;
      auto& kernel = kernels_[s];
      for (int j = 0; j < kTaps; ++j) {
        // Tap j applies to x[n - (j - kFractionalDelayHalfTaps + 1)].
        const double k = j - kFractionalDelayHalfTaps + 1;
        const double arg = k - frac;
        const double sinc =
            arg == 0.0 ? 1.0 : std::sin(kPi * arg) / (kPi * arg);
        const double pos = (arg + kFractionalDelayHalfTaps) /
                           (2.0 * kFractionalDelayHalfTaps);
        const double window = 0.42 - 0.5 * std::cos(2.0 * kPi * pos) +
                              0.08 * std::cos(4.0 * kPi * pos);
        kernel[j] = sinc * window;
      }
    }
  }

  static constexpr int kTaps = 2 * kFractionalDelayHalfTaps;

  // Output sample `n` of `x` delayed by `delay_steps / kFractionalDelaySteps`
  // samples.
  double Tap(const std::vector<double>& x, long n, long delay_steps) const {
    const long whole = delay_steps / kFractionalDelaySteps;
    const int frac = static_cast<int>(delay_steps % kFractionalDelaySteps);
    if (frac == 0) {
      const long idx = n - whole;
      return idx >= 0 && idx < static_cast<long>(x.size()) ? x[idx] : 0.0;
    }
    const auto& kernel = kernels_[frac];
    double acc = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const long idx = n - whole - (j - kFractionalDelayHalfTaps + 1);
      if (idx >= 0 && idx < static_cast<long>(x.size())) {
        acc += kernel[j] * x[idx];
      }
    }
    return acc;
  }

 private:
  std::array<std::array<double, kTaps>, kFractionalDelaySteps> kernels_;
};

inline const FractionalDelayBank& DelayBank() {
  static const FractionalDelayBank bank;
  return bank;
}

struct EarParams {
  long delay_steps = 0;
  double shelf_gain = 1.0;
};

inline std::array<EarParams, 2> EarParamsFor(const SourceLocation& loc,
                                             const HeadModel& head,
                                             int sample_rate) {
  const double itd = ParametricItdSeconds(loc, head);
  const long steps =
      std::lround(std::abs(itd) * sample_rate * kFractionalDelaySteps);
  const double lat = LateralAngle(loc);
  const double far_gain =
      std::pow(10.0, -head.max_shadow_db * std::abs(std::sin(lat)) / 20.0);
  EarParams near_ear{0, 1.0};
  EarParams far_ear{steps, far_gain};
  if (lat > 0) return {near_ear, far_ear};  // source on the left
  if (lat < 0) return {far_ear, near_ear};
  return {near_ear, near_ear};
}

// Renders one ear given per-sample ear parameters.
template <typename ParamsAt>
std::vector<double> RenderEar(const std::vector<double>& src, int sample_rate,
                              const HeadModel& head, ParamsAt params_at) {
  const auto& bank = DelayBank();
  const double k = 2.0 * sample_rate;
  const double beta = 2.0 * head.speed_of_sound / head.head_radius;
  const double a1 = (beta - k) / (k + beta);
  std::vector<double> out(src.size());
  double x_prev = 0.0;
  double y_prev = 0.0;
  for (std::size_t n = 0; n < src.size(); ++n) {
    const EarParams p = params_at(n);
    const double x = bank.Tap(src, static_cast<long>(n), p.delay_steps);
    const double b0 = (p.shelf_gain * k + beta) / (k + beta);
    const double b1 = (beta - p.shelf_gain * k) / (k + beta);
    const double y = b0 * x + b1 * x_prev - a1 * y_prev;
    x_prev = x;
    y_prev = y;
    out[n] = y;
  }
  return out;
}

}  // namespace internal

inline BinauralSignal SpatializeParametric(const MonoSignal& src,
                                           const SourceLocation& loc,
                                           const HeadModel& head = {}) {
  Require(head.head_radius > 0.0, "head radius must be positive");
  Require(head.speed_of_sound > 0.0, "speed of sound must be positive");
  const auto ears = internal::EarParamsFor(loc, head, src.sample_rate);
  auto left = internal::RenderEar(src.samples, src.sample_rate, head,
                                  [&](std::size_t) { return ears[0]; });
  auto right = internal::RenderEar(src.samples, src.sample_rate, head,
                                   [&](std::size_t) { return ears[1]; });
  return BinauralSignal(std::move(left), std::move(right), src.sample_rate);
}

// Time-varying version: the source follows `traj`, with ear parameters
// updated every sample.
inline BinauralSignal SpatializeParametric(const MonoSignal& src,
                                           const Trajectory& traj,
                                           const HeadModel& head = {}) {
  Require(head.head_radius > 0.0, "head radius must be positive");
  std::vector<std::array<internal::EarParams, 2>> params(src.size());
  for (std::size_t n = 0; n < src.size(); ++n) {
    const double t = std::min(static_cast<double>(n) / src.sample_rate,
                              traj.duration_sec());
    params[n] = internal::EarParamsFor(SampleTrajectoryAt(traj, t), head,
                                       src.sample_rate);
  }
  auto left = internal::RenderEar(src.samples, src.sample_rate, head,
                                  [&](std::size_t n) { return params[n][0]; });
  auto right = internal::RenderEar(
      src.samples, src.sample_rate, head,
      [&](std::size_t n) { return params[n][1]; });
  return BinauralSignal(std::move(left), std::move(right), src.sample_rate);
}

}  // namespace dplm

#endif  // DPLM_AUDIO_SPATIALIZE_H_
