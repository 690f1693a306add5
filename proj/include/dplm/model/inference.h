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

#ifndef DPLM_MODEL_INFERENCE_H_
#define DPLM_MODEL_INFERENCE_H_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dplm/audio/angles.h"
#include "dplm/audio/stft.h"
#include "dplm/audio/types.h"
#include "dplm/model/config.h"
#include "dplm/model/doa_model.h"

namespace dplm {

inline std::vector<double> Softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

struct PredictionFrame {
  int frame_index = 0;
  std::vector<double> azimuth_logits;
  std::vector<double> azimuth_probs;
  std::optional<std::vector<double>> elevation_logits;
  std::optional<std::vector<double>> elevation_probs;
};

inline PredictionFrame MakeFrame(int index, std::vector<double> az_logits,
                                 std::optional<std::vector<double>> el_logits) {
  PredictionFrame frame;
  frame.frame_index = index;
  frame.azimuth_probs = Softmax(az_logits);
  frame.azimuth_logits = std::move(az_logits);
  if (el_logits) {
    frame.elevation_probs = Softmax(*el_logits);
    frame.elevation_logits = std::move(el_logits);
  }
  return frame;
}

// Softmax-weighted direction: circular mean of azimuth bin centers and plain
// weighted mean of elevation bin centers.
inline SourceLocation DecodeProbabilities(
    std::span<const double> azimuth_probs,
    const std::optional<std::vector<double>>& elevation_probs,
    const BinGrid& grid) {
  double s = 0.0, c = 0.0;
  for (int k = 0; k < static_cast<int>(azimuth_probs.size()); ++k) {
    const double center = grid.azimuth_center(k);
    s += azimuth_probs[k] * std::sin(center);
    c += azimuth_probs[k] * std::cos(center);
  }
  double elevation = 0.0;
  if (elevation_probs) {
    for (int k = 0; k < static_cast<int>(elevation_probs->size()); ++k) {
      elevation += (*elevation_probs)[k] * grid.elevation_center(k);
    }
  }
  return SourceLocation(std::atan2(s, c), elevation);
}

inline SourceLocation DecodeFrame(const PredictionFrame& frame,
                                  const BinGrid& grid) {
  return DecodeProbabilities(frame.azimuth_probs, frame.elevation_probs, grid);
}

// Logits averaged over all frames, then one softmax.
inline PredictionFrame PoolFrames(std::span<const PredictionFrame> frames) {
  Require(!frames.empty(), "no prediction frames");
  std::vector<double> az(frames[0].azimuth_logits.size(), 0.0);
  std::optional<std::vector<double>> el;
  if (frames[0].elevation_logits) {
    el = std::vector<double>(frames[0].elevation_logits->size(), 0.0);
  }
  for (const auto& f : frames) {
    for (std::size_t k = 0; k < az.size(); ++k) {
      az[k] += f.azimuth_logits[k] / frames.size();
    }
    if (el) {
      for (std::size_t k = 0; k < el->size(); ++k) {
        (*el)[k] += (*f.elevation_logits)[k] / frames.size();
      }
    }
  }
  return MakeFrame(0, std::move(az), std::move(el));
}

// Static variant: a single location for the whole excerpt. Moving variant:
// one location per frame.
inline std::vector<SourceLocation> DecodeDoa(
    std::span<const PredictionFrame> frames, const BinGrid& grid,
    Variant variant) {
  Require(!frames.empty(), "no prediction frames");
  if (variant == Variant::kStatic) {
    return {DecodeFrame(PoolFrames(frames), grid)};
  }
  std::vector<SourceLocation> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(DecodeFrame(f, grid));
  return out;
}

struct InferenceResult {
  std::vector<PredictionFrame> frames;
  std::optional<ActivationStack> activations;
};

inline std::vector<PredictionFrame> FramesFromOutput(const ModelOutput& out,
                                                     std::size_t sample) {
  const auto& az = out.azimuth_logits[sample];
  std::vector<PredictionFrame> frames;
  frames.reserve(az.rows());
  for (int t = 0; t < az.rows(); ++t) {
    std::vector<double> az_row(az.row(t).data(), az.row(t).data() + az.cols());
    std::optional<std::vector<double>> el_row;
    if (!out.elevation_logits.empty()) {
      const auto& el = out.elevation_logits[sample];
      el_row = std::vector<double>(el.row(t).data(),
                                   el.row(t).data() + el.cols());
    }
    frames.push_back(MakeFrame(t, std::move(az_row), std::move(el_row)));
  }
  return frames;
}

// Inference-mode forward pass on one feature tensor.
inline InferenceResult RunModel(const DoaModel& model,
                                const FeatureTensor& feat, bool capture) {
  DoaModel::Tape tape;
  const ModelOutput out =
      model.Forward({DoaModel::ToTensor(feat)}, /*training=*/false, &tape);
  InferenceResult result;
  result.frames = FramesFromOutput(out, 0);
  if (capture) result.activations = model.Capture(tape, 0);
  return result;
}

}  // namespace dplm

#endif  // DPLM_MODEL_INFERENCE_H_
