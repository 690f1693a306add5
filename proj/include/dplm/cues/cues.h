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

#ifndef DPLM_CUES_CUES_H_
#define DPLM_CUES_CUES_H_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

struct CueFrame {
  double itd_s = 0.0;   // positive when the left ear leads
  double ild_db = 0.0;  // positive when the left ear is louder
  double iacc = 0.0;
  int frame_index = 0;
};

struct CueConfig {
  int frame_len = 1024;
  int hop = 512;
  double max_lag_s = 1e-3;
  double silence_dbfs = -60.0;

  void Validate(int sample_rate) const {
    Require(frame_len > 0 && hop > 0, "cue frame length and hop must be > 0");
    Require(max_lag_s > 0.0, "cue max lag must be > 0");
    Require(frame_len > 2.0 * max_lag_s * sample_rate,
            "cue frame must exceed twice the maximum lag");
  }
};

namespace internal {

// Lags computed beyond the search range so that interpolation near the range
// edge still sees both sides of the peak.
inline constexpr int kInterpMargin = 32;

// Band-limited reconstruction of samples v[m + reach], m in [-reach, reach],
// at real-valued lag tau.
inline double SincInterp(const std::vector<double>& v, int reach, double tau) {
  double sum = 0.0;
  for (int m = -reach; m <= reach; ++m) {
    const double d = tau - m;
    sum += v[m + reach] *
           (d == 0.0 ? 1.0 : std::sin(std::numbers::pi * d) / (std::numbers::pi * d));
  }
  return sum;
}

// Sub-sample maximum of the interpolated correlation within one sample of the
// integer peak: a 1/64-sample grid search, then a parabola through the best
// grid point and its neighbours.
inline double RefinePeak(const std::vector<double>& v, int reach, int peak,
                         int max_lag) {
  constexpr int kSteps = 64;
  constexpr double kStep = 1.0 / kSteps;
  const double lo = std::max<double>(peak - 1, -max_lag);
  const double hi = std::min<double>(peak + 1, max_lag);
  const int n = static_cast<int>(std::lround((hi - lo) * kSteps));
  std::vector<double> y(n + 1);
  int best = 0;
  for (int i = 0; i <= n; ++i) {
    y[i] = SincInterp(v, reach, lo + i * kStep);
    if (y[i] > y[best]) best = i;
  }
  double offset = 0.0;
  if (best > 0 && best < n) {
    const double curv = y[best - 1] - 2.0 * y[best] + y[best + 1];
    if (curv < 0.0) offset = 0.5 * (y[best - 1] - y[best + 1]) / curv;
  }
  return std::clamp(lo + (best + offset) * kStep, -1.0 * max_lag,
                    1.0 * max_lag);
}

}  // namespace internal

// Per-frame ITD, ILD and IACC. Frames whose mean power over both ears falls
// below the silence threshold are skipped. Frames start at multiples of hop and
// must fit inside the signal.
inline std::vector<CueFrame> ExtractCues(const BinauralSignal& x,
                                         const CueConfig& cfg = {}) {
  cfg.Validate(x.sample_rate());
  const auto& l = x.left();
  const auto& r = x.right();
  const long n = static_cast<long>(x.size());
  const int max_lag = static_cast<int>(std::floor(cfg.max_lag_s * x.sample_rate()));
  const double silence = std::pow(10.0, cfg.silence_dbfs / 10.0);
  constexpr double kPowerFloor = 1e-20;
  std::vector<CueFrame> out;
  int index = 0;
  for (long start = 0; start + cfg.frame_len <= n; start += cfg.hop, ++index) {
    const long end = start + cfg.frame_len;
    double pl = 0.0, pr = 0.0;
    for (long i = start; i < end; ++i) {
      pl += l[i] * l[i];
      pr += r[i] * r[i];
    }
    if ((pl + pr) / (2.0 * cfg.frame_len) < silence) continue;

    // Cross-correlation of the left frame against the right channel shifted
    // by lag; samples outside the signal count as zero. The extra margin of
    // lags only feeds the sub-sample interpolation.
    const int reach = max_lag + internal::kInterpMargin;
    std::vector<double> cross(2 * reach + 1, 0.0), er(2 * reach + 1, 0.0);
    for (int lag = -reach; lag <= reach; ++lag) {
      double c = 0.0, e = 0.0;
      for (long i = std::max(start, -static_cast<long>(lag));
           i < std::min(end, n - lag); ++i) {
        c += l[i] * r[i + lag];
        e += r[i + lag] * r[i + lag];
      }
      cross[lag + reach] = c;
      er[lag + reach] = e;
    }
    auto ncc = [&](int lag) {
      const double denom = std::sqrt(pl * er[lag + reach]);
      return denom > 0.0 ? cross[lag + reach] / denom : 0.0;
    };
    int best = -max_lag;
    for (int lag = -max_lag + 1; lag <= max_lag; ++lag) {
      if (ncc(lag) > ncc(best)) best = lag;
    }
    const double tau = internal::RefinePeak(cross, reach, best, max_lag);
    const int lo = static_cast<int>(std::floor(tau));
    const double w = tau - lo;
    const double e_tau = (1.0 - w) * er[lo + reach] + w * er[lo + 1 + reach];
    const double denom = std::sqrt(pl * e_tau);
    const double peak = std::max(
        ncc(best),
        denom > 0.0 ? internal::SincInterp(cross, reach, tau) / denom : 0.0);
    CueFrame f;
    f.frame_index = index;
    f.itd_s = std::clamp(tau / x.sample_rate(), -cfg.max_lag_s, cfg.max_lag_s);
    f.iacc = std::clamp(peak, 0.0, 1.0);
    f.ild_db = 10.0 * std::log10(std::max(pl, kPowerFloor) /
                                 std::max(pr, kPowerFloor));
    out.push_back(f);
  }
  return out;
}

struct CueSummary {
  double itd_s = 0.0;
  double ild_db = 0.0;
  double iacc = 0.0;
  bool silent = true;
};

namespace internal {

inline double Median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

}  // namespace internal

// Median cues over voiced frames. A silent signal summarizes to all zeros.
inline CueSummary SummarizeCues(const std::vector<CueFrame>& frames) {
  CueSummary s;
  if (frames.empty()) return s;
  std::vector<double> itd, ild, iacc;
  for (const auto& f : frames) {
    itd.push_back(f.itd_s);
    ild.push_back(f.ild_db);
    iacc.push_back(f.iacc);
  }
  s.itd_s = internal::Median(itd);
  s.ild_db = internal::Median(ild);
  s.iacc = internal::Median(iacc);
  s.silent = false;
  return s;
}

struct CueWeights {
  double itd = 1.0 / 3.0;
  double ild = 1.0 / 3.0;
  double iacc = 1.0 / 3.0;
  double itd_norm_s = 1e-3;
  double ild_norm_db = 20.0;
};

inline double CueDistance(const CueSummary& a, const CueSummary& b,
                          const CueWeights& w = {}) {
  if (a.silent && b.silent) {
    Fail(ErrorCode::kInvalidArgument, "cue distance between two silent signals");
  }
  return w.itd * std::abs(a.itd_s - b.itd_s) / w.itd_norm_s +
         w.ild * std::abs(a.ild_db - b.ild_db) / w.ild_norm_db +
         w.iacc * std::abs(a.iacc - b.iacc);
}

inline double CueDistance(const BinauralSignal& x1, const BinauralSignal& x2,
                          const CueConfig& cfg = {}, const CueWeights& w = {}) {
  return CueDistance(SummarizeCues(ExtractCues(x1, cfg)),
                     SummarizeCues(ExtractCues(x2, cfg)), w);
}

}  // namespace dplm

#endif  // DPLM_CUES_CUES_H_
