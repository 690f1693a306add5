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

#ifndef DPLM_EVAL_STATS_H_
#define DPLM_EVAL_STATS_H_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "dplm/audio/angles.h"
#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

// Root-mean-square azimuth error in degrees after reflecting both prediction
// and truth about the coronal plane.
inline double RmseFoldedAzimuthDeg(std::span<const SourceLocation> pred,
                                   std::span<const SourceLocation> truth) {
  if (pred.size() != truth.size()) {
    Fail(ErrorCode::kShapeMismatch, "prediction/truth length mismatch");
  }
  Require(!pred.empty(), "RMSE of an empty set");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = FoldFrontBack(pred[i].azimuth()) -
                     FoldFrontBack(truth[i].azimuth());
    acc += e * e;
  }
  return RadToDeg(std::sqrt(acc / pred.size()));
}

// Ranks starting at 1; tied values share their mean rank.
inline std::vector<double> AverageRanks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double Pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kShapeMismatch, "correlation inputs differ in length");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    Fail(ErrorCode::kInvalidArgument,
         "correlation is undefined for a constant input");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Spearman rank correlation: Pearson correlation of average ranks.
inline double Spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Fail(ErrorCode::kShapeMismatch, "correlation inputs differ in length");
  }
  Require(a.size() >= 3, "Spearman correlation needs at least 3 values");
  const auto ra = AverageRanks(a);
  const auto rb = AverageRanks(b);
  return Pearson(ra, rb);
}

}  // namespace dplm

#endif  // DPLM_EVAL_STATS_H_
