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

#ifndef DPLM_AUDIO_ANGLES_H_
#define DPLM_AUDIO_ANGLES_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

struct BinIndex {
  int azimuth = 0;
  int elevation = 0;

  friend bool operator==(const BinIndex&, const BinIndex&) = default;
};

// Half-open bins counted from the start of each span. Azimuth is circular, so
// +pi and -pi share bin 0.
inline BinIndex AngleToBin(const SourceLocation& loc, const BinGrid& grid) {
  double u = (loc.azimuth() + kPi) / (2.0 * kPi);
  u -= std::floor(u);
  const int az = std::clamp(static_cast<int>(std::floor(u * grid.n_azimuth)),
                            0, grid.n_azimuth - 1);
  const double v = (loc.elevation() + kPi / 2) / kPi;
  const int el = std::clamp(static_cast<int>(std::floor(v * grid.n_elevation)),
                            0, grid.n_elevation - 1);
  return {az, el};
}

inline SourceLocation BinToAngle(const BinIndex& bin, const BinGrid& grid) {
  return SourceLocation(grid.azimuth_center(bin.azimuth),
                        grid.elevation_center(bin.elevation));
}

// Reflects an azimuth about the coronal plane into [-pi/2, pi/2].
inline double FoldFrontBack(double azimuth) {
  if (azimuth > kPi / 2) return kPi - azimuth;
  if (azimuth < -kPi / 2) return -kPi - azimuth;
  return azimuth;
}

// The argument of the arcsine in the great-circle distance, before clamping.
inline double HaversineRadicand(double az1, double el1, double az2,
                                double el2) {
  const double s_el = std::sin((el1 - el2) / 2);
  const double s_az = std::sin((az1 - az2) / 2);
  return s_el * s_el + std::cos(el1) * std::cos(el2) * s_az * s_az;
}

// Great-circle angle between two directions, in [0, pi].
inline double Haversine(const SourceLocation& p, const SourceLocation& q) {
  const double a = HaversineRadicand(p.azimuth(), p.elevation(), q.azimuth(),
                                     q.elevation());
  return 2.0 * std::asin(std::sqrt(std::clamp(a, 0.0, 1.0)));
}

namespace internal {

inline std::array<double, 3> ToUnitVector(const SourceLocation& loc) {
  const double ce = std::cos(loc.elevation());
  return {ce * std::cos(loc.azimuth()), ce * std::sin(loc.azimuth()),
          std::sin(loc.elevation())};
}

inline SourceLocation FromUnitVector(const std::array<double, 3>& v) {
  const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return SourceLocation(std::atan2(v[1], v[0]),
                        std::asin(std::clamp(v[2] / norm, -1.0, 1.0)));
}

// Spherical linear interpolation along the shorter great-circle arc.
inline SourceLocation Slerp(const SourceLocation& a, const SourceLocation& b,
                            double frac) {
  const auto va = ToUnitVector(a);
  const auto vb = ToUnitVector(b);
  const double dot =
      std::clamp(va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2], -1.0, 1.0);
  const double omega = std::acos(dot);
  if (omega < 1e-9) return a;
  if (kPi - omega < 1e-9) {
    // Antipodal endpoints have no unique shortest arc; sweep azimuth instead.
    return SourceLocation(
        a.azimuth() + frac * WrapAngle(b.azimuth() - a.azimuth()),
        a.elevation() + frac * (b.elevation() - a.elevation()));
  }
  const double s = std::sin(omega);
  const double wa = std::sin((1 - frac) * omega) / s;
  const double wb = std::sin(frac * omega) / s;
  return FromUnitVector({wa * va[0] + wb * vb[0], wa * va[1] + wb * vb[1],
                         wa * va[2] + wb * vb[2]});
}

}  // namespace internal

inline SourceLocation SampleTrajectoryAt(const Trajectory& traj, double t) {
  const auto& keys = traj.keyframes();
  if (t <= keys.front().time_sec) return keys.front().location;
  if (t >= keys.back().time_sec) return keys.back().location;
  auto upper = std::upper_bound(
      keys.begin(), keys.end(), t,
      [](double v, const Keyframe& k) { return v < k.time_sec; });
  const Keyframe& hi = *upper;
  const Keyframe& lo = *(upper - 1);
  const double frac = (t - lo.time_sec) / (hi.time_sec - lo.time_sec);
  return internal::Slerp(lo.location, hi.location, frac);
}

inline std::vector<SourceLocation> SampleTrajectory(
    const Trajectory& traj, std::span<const double> frame_times) {
  std::vector<SourceLocation> out;
  out.reserve(frame_times.size());
  for (double t : frame_times) {
    Require(t >= 0.0 && t <= traj.duration_sec(),
            "frame time outside trajectory duration");
    out.push_back(SampleTrajectoryAt(traj, t));
  }
  return out;
}

}  // namespace dplm

#endif  // DPLM_AUDIO_ANGLES_H_
