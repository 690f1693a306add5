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

#ifndef DPLM_TRAINING_LOSS_H_
#define DPLM_TRAINING_LOSS_H_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "dplm/audio/angles.h"
#include "dplm/audio/types.h"
#include "dplm/core/error.h"
#include "dplm/model/config.h"
#include "dplm/model/inference.h"
#include "dplm/nn/tensor.h"

namespace dplm {

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kRadicandFloor = 1e-12;

struct ClassTarget {
  int bin_index = 0;
  double smoothing_alpha = 0.0;
  int n_classes = 1;

  void Validate() const {
    Require(n_classes > 0, "class count must be positive");
    Require(bin_index >= 0 && bin_index < n_classes, "target bin out of range");
    Require(smoothing_alpha >= 0.0 && smoothing_alpha < 1.0,
            "smoothing alpha must be in [0, 1)");
  }

  double weight(int k) const {
    return (k == bin_index ? 1.0 - smoothing_alpha : 0.0) +
           smoothing_alpha / n_classes;
  }
};

// Cross-entropy against the label-smoothed target distribution.
inline double LabelSmoothedCe(const ClassTarget& target,
                              std::span<const double> probs) {
  target.Validate();
  if (static_cast<int>(probs.size()) != target.n_classes) {
    Fail(ErrorCode::kShapeMismatch,
         "probability vector length does not match the class count");
  }
  double loss = 0.0;
  for (int k = 0; k < target.n_classes; ++k) {
    loss -= target.weight(k) * std::log(std::max(probs[k], kProbabilityFloor));
  }
  return loss;
}

// dLoss/dlogits of LabelSmoothedCe(softmax(logits)). Classes whose
// probability sits below the floor contribute no gradient.
inline std::vector<double> LabelSmoothedCeLogitGrad(
    const ClassTarget& target, std::span<const double> probs) {
  double live_mass = 0.0;
  for (int k = 0; k < target.n_classes; ++k) {
    if (probs[k] > kProbabilityFloor) live_mass += target.weight(k);
  }
  std::vector<double> g(probs.size());
  for (int k = 0; k < target.n_classes; ++k) {
    const double own = probs[k] > kProbabilityFloor ? target.weight(k) : 0.0;
    g[k] = probs[k] * live_mass - own;
  }
  return g;
}

struct HaversineGrad {
  double value = 0.0;
  double d_azimuth = 0.0;    // w.r.t. the predicted azimuth
  double d_elevation = 0.0;  // w.r.t. the predicted elevation
};

// Great-circle distance and its gradient w.r.t. the first argument. The
// radicand is kept inside [1e-12, 1 - 1e-12] for the gradient only, so the
// value is exact while the gradient stays finite at coincident and antipodal
// points.
inline HaversineGrad HaversineWithGrad(double az_pred, double el_pred,
                                       double az_true, double el_true) {
  const double a = HaversineRadicand(az_pred, el_pred, az_true, el_true);
  HaversineGrad out;
  out.value = 2.0 * std::asin(std::sqrt(std::clamp(a, 0.0, 1.0)));
  const double ac = std::clamp(a, kRadicandFloor, 1.0 - kRadicandFloor);
  const double dh_da = 1.0 / (std::sqrt(ac) * std::sqrt(1.0 - ac));
  const double s_az = std::sin((az_pred - az_true) / 2);
  out.d_azimuth = dh_da * std::cos(el_pred) * std::cos(el_true) *
                  std::sin(az_pred - az_true) / 2;
  out.d_elevation = dh_da * (std::sin(el_pred - el_true) / 2 -
                             std::sin(el_pred) * std::cos(el_true) * s_az * s_az);
  return out;
}

struct LossResult {
  double total = 0.0;
  double cross_entropy = 0.0;  // mean over scored frames
  double haversine = 0.0;      // mean over scored frames, radians
  nn::RowMatrix d_azimuth_logits;
  nn::RowMatrix d_elevation_logits;  // empty for azimuth-only heads
};

struct FrameTruth {
  SourceLocation location;
  int azimuth_bin = 0;
  int elevation_bin = 0;
};

inline FrameTruth MakeTruth(const SourceLocation& loc, const BinGrid& grid) {
  const BinIndex bin = AngleToBin(loc, grid);
  return {loc, bin.azimuth, bin.elevation};
}

namespace internal {

// Loss on one distribution (one frame, or the pooled static prediction).
// Writes dLoss/dlogits, scaled by `scale`, into the given rows.
inline void ScoreDistribution(std::span<const double> az_logits,
                              std::span<const double> el_logits,
                              const FrameTruth& truth, const BinGrid& grid,
                              double alpha, double scale, double* ce_out,
                              double* hav_out, std::span<double> d_az,
                              std::span<double> d_el) {
  const bool with_el = !el_logits.empty();
  const int k_az = static_cast<int>(az_logits.size());
  const std::vector<double> p = Softmax(az_logits);
  const ClassTarget az_target{truth.azimuth_bin, alpha, k_az};
  double ce = LabelSmoothedCe(az_target, p);
  std::vector<double> g_az = LabelSmoothedCeLogitGrad(az_target, p);
  for (double& v : g_az) v *= 0.5;

  std::vector<double> q;
  std::optional<std::vector<double>> q_opt;
  std::vector<double> g_el;
  if (with_el) {
    q = Softmax(el_logits);
    const ClassTarget el_target{truth.elevation_bin, alpha,
                                static_cast<int>(el_logits.size())};
    ce += LabelSmoothedCe(el_target, q);
    g_el = LabelSmoothedCeLogitGrad(el_target, q);
    for (double& v : g_el) v *= 0.5;
    q_opt = q;
  }

  const SourceLocation decoded = DecodeProbabilities(p, q_opt, grid);
  const double el_true = with_el ? truth.location.elevation() : 0.0;
  const HaversineGrad hav = HaversineWithGrad(
      decoded.azimuth(), decoded.elevation(), truth.location.azimuth(), el_true);

  // Azimuth decode: theta = atan2(S, C) over bin centers.
  double s = 0.0, c = 0.0;
  for (int k = 0; k < k_az; ++k) {
    s += p[k] * std::sin(grid.azimuth_center(k));
    c += p[k] * std::cos(grid.azimuth_center(k));
  }
  const double r2 = s * s + c * c;
  std::vector<double> dl_dp(k_az, 0.0);
  if (r2 > 0.0) {
    for (int k = 0; k < k_az; ++k) {
      const double ck = grid.azimuth_center(k);
      dl_dp[k] = 0.5 * hav.d_azimuth *
                 (c * std::sin(ck) - s * std::cos(ck)) / r2;
    }
  }
  double mean = 0.0;
  for (int k = 0; k < k_az; ++k) mean += p[k] * dl_dp[k];
  for (int k = 0; k < k_az; ++k) g_az[k] += p[k] * (dl_dp[k] - mean);

  if (with_el) {
    const int k_el = static_cast<int>(el_logits.size());
    double mean_el = 0.0;
    std::vector<double> dl_dq(k_el);
    for (int k = 0; k < k_el; ++k) {
      dl_dq[k] = 0.5 * hav.d_elevation * grid.elevation_center(k);
      mean_el += q[k] * dl_dq[k];
    }
    for (int k = 0; k < k_el; ++k) g_el[k] += q[k] * (dl_dq[k] - mean_el);
    for (int k = 0; k < k_el; ++k) d_el[k] += scale * g_el[k];
  }
  for (int k = 0; k < k_az; ++k) d_az[k] += scale * g_az[k];
  *ce_out += ce;
  *hav_out += hav.value;
}

inline std::span<const double> Row(const nn::RowMatrix& m, int t) {
  return {m.data() + static_cast<std::size_t>(t) * m.cols(),
          static_cast<std::size_t>(m.cols())};
}

inline std::span<double> Row(nn::RowMatrix& m, int t) {
  return {m.data() + static_cast<std::size_t>(t) * m.cols(),
          static_cast<std::size_t>(m.cols())};
}

}  // namespace internal

// Average of the label-smoothed cross-entropy and the great-circle distance
// between the decoded and true direction, each averaged over frames. The
// moving variant scores every frame against `truths[t]`; the static variant
// scores the time-averaged logits against `truths[0]`. With azimuth-only
// heads both elevations are taken as zero. When an elevation head is present
// its cross-entropy is added to the azimuth one.
inline LossResult CombinedLoss(const nn::RowMatrix& az_logits,
                               const nn::RowMatrix* el_logits,
                               std::span<const FrameTruth> truths,
                               Variant variant, double alpha,
                               const BinGrid& grid) {
  const int frames = static_cast<int>(az_logits.rows());
  Require(frames > 0, "no frames to score");
  LossResult r;
  r.d_azimuth_logits = nn::RowMatrix::Zero(frames, az_logits.cols());
  if (el_logits != nullptr) {
    r.d_elevation_logits = nn::RowMatrix::Zero(frames, el_logits->cols());
  }
  if (variant == Variant::kMoving) {
    if (static_cast<int>(truths.size()) != frames) {
      Fail(ErrorCode::kShapeMismatch, "moving variant needs one truth per frame");
    }
    const double scale = 1.0 / frames;
    for (int t = 0; t < frames; ++t) {
      std::span<const double> el_row;
      std::span<double> d_el_row;
      if (el_logits != nullptr) {
        el_row = internal::Row(*el_logits, t);
        d_el_row = internal::Row(r.d_elevation_logits, t);
      }
      internal::ScoreDistribution(internal::Row(az_logits, t), el_row,
                                  truths[t], grid, alpha, scale,
                                  &r.cross_entropy, &r.haversine,
                                  internal::Row(r.d_azimuth_logits, t),
                                  d_el_row);
    }
    r.cross_entropy /= frames;
    r.haversine /= frames;
  } else {
    Require(!truths.empty(), "static variant needs a truth");
    const Eigen::RowVectorXd pooled_az = az_logits.colwise().mean();
    std::vector<double> d_az(pooled_az.size(), 0.0);
    std::vector<double> pooled_el_v, d_el;
    if (el_logits != nullptr) {
      const Eigen::RowVectorXd pooled_el = el_logits->colwise().mean();
      pooled_el_v.assign(pooled_el.data(), pooled_el.data() + pooled_el.size());
      d_el.assign(pooled_el.size(), 0.0);
    }
    internal::ScoreDistribution(
        std::span<const double>(pooled_az.data(), pooled_az.size()),
        pooled_el_v, truths[0], grid, alpha, 1.0, &r.cross_entropy,
        &r.haversine, d_az, d_el);
    for (int t = 0; t < frames; ++t) {
      for (std::size_t k = 0; k < d_az.size(); ++k) {
        r.d_azimuth_logits(t, k) = d_az[k] / frames;
      }
      for (std::size_t k = 0; k < d_el.size(); ++k) {
        r.d_elevation_logits(t, k) = d_el[k] / frames;
      }
    }
  }
  r.total = 0.5 * r.cross_entropy + 0.5 * r.haversine;
  return r;
}

// Same objective evaluated from prediction frames (value only).
inline double CombinedLoss(std::span<const PredictionFrame> frames,
                           std::span<const FrameTruth> truths, Variant variant,
                           double alpha, const BinGrid& grid) {
  Require(!frames.empty(), "no prediction frames");
  const int t_count = static_cast<int>(frames.size());
  nn::RowMatrix az(t_count, frames[0].azimuth_logits.size());
  nn::RowMatrix el;
  const bool with_el = frames[0].elevation_logits.has_value();
  if (with_el) el.resize(t_count, frames[0].elevation_logits->size());
  for (int t = 0; t < t_count; ++t) {
    for (int k = 0; k < az.cols(); ++k) az(t, k) = frames[t].azimuth_logits[k];
    for (int k = 0; k < el.cols(); ++k) {
      el(t, k) = (*frames[t].elevation_logits)[k];
    }
  }
  return CombinedLoss(az, with_el ? &el : nullptr, truths, variant, alpha, grid)
      .total;
}

}  // namespace dplm

#endif  // DPLM_TRAINING_LOSS_H_
