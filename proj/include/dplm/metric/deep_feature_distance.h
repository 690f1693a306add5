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

#ifndef DPLM_METRIC_DEEP_FEATURE_DISTANCE_H_
#define DPLM_METRIC_DEEP_FEATURE_DISTANCE_H_

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dplm/audio/stft.h"
#include "dplm/audio/types.h"
#include "dplm/core/error.h"
#include "dplm/model/doa_model.h"
#include "dplm/model/inference.h"

namespace dplm {

enum class Alignment {
  kStrictEqualLength,  // frame-by-frame comparison; frame counts must match
  kTimePooled,         // compare time-averaged activations
  kAuto,               // strict when frame counts match, time-pooled otherwise
};

inline std::string AlignmentName(Alignment a) {
  switch (a) {
    case Alignment::kStrictEqualLength:
      return "strict_equal_length";
    case Alignment::kTimePooled:
      return "time_pooled";
    case Alignment::kAuto:
      return "auto";
  }
  return "auto";
}

inline Alignment ParseAlignment(const std::string& name) {
  if (name == "strict_equal_length" || name == "strict") {
    return Alignment::kStrictEqualLength;
  }
  if (name == "time_pooled") return Alignment::kTimePooled;
  if (name == "auto") return Alignment::kAuto;
  Fail(ErrorCode::kInvalidArgument, "unknown alignment: " + name);
}

struct MetricConfig {
  std::vector<std::string> layer_names;  // empty selects every capture layer
  Alignment alignment = Alignment::kAuto;
};

struct LayerDistance {
  std::string name;
  double value = 0.0;
};

struct DistanceResult {
  double distance = 0.0;
  std::vector<LayerDistance> layers;
  Alignment alignment = Alignment::kStrictEqualLength;  // the mode applied
};

namespace internal {

inline double Sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

// Mean over time for every (band, channel), indexed band * channels + c.
inline std::vector<double> TimeMean(const ActivationLayer& layer) {
  std::vector<double> mean(static_cast<std::size_t>(layer.bands) * layer.channels,
                           0.0);
  for (int t = 0; t < layer.frames; ++t) {
    for (int b = 0; b < layer.bands; ++b) {
      for (int c = 0; c < layer.channels; ++c) {
        mean[static_cast<std::size_t>(b) * layer.channels + c] +=
            layer.values[layer.index(t, b, c)];
      }
    }
  }
  for (double& v : mean) v /= layer.frames;
  return mean;
}

}  // namespace internal

// Deep-feature distance between two binaural recordings: per selected hidden
// layer, the mean absolute activation difference, summed over layers.
class DeepFeatureMetric {
 public:
  DeepFeatureMetric(std::shared_ptr<const DoaModel> model, MetricConfig cfg,
                    int dft_size = 512, int hop = 256)
      : model_(std::move(model)), cfg_(std::move(cfg)),
        extractor_(dft_size, hop) {
    Require(model_ != nullptr, "metric needs a model");
    const auto all = model_->CaptureLayerNames();
    if (cfg_.layer_names.empty()) cfg_.layer_names = all;
    for (const auto& name : cfg_.layer_names) {
      auto it = std::find(all.begin(), all.end(), name);
      Require(it != all.end(), "unknown capture layer: " + name);
      selected_.push_back(static_cast<int>(it - all.begin()));
    }
  }

  const MetricConfig& config() const { return cfg_; }
  const DoaModel& model() const { return *model_; }
  const FeatureExtractor& extractor() const { return extractor_; }

  ActivationStack Activations(const BinauralSignal& x) const {
    return *RunModel(*model_, extractor_.Extract(x), true).activations;
  }

  DistanceResult Compare(const ActivationStack& a,
                         const ActivationStack& b) const {
    const Alignment mode = Resolve(a, b);
    DistanceResult r;
    r.alignment = mode;
    for (int idx : selected_) {
      const ActivationLayer& la = a.layers[idx];
      const ActivationLayer& lb = b.layers[idx];
      double acc = 0.0;
      if (mode == Alignment::kStrictEqualLength) {
        for (std::size_t k = 0; k < la.values.size(); ++k) {
          acc += std::abs(la.values[k] - lb.values[k]);
        }
        acc /= static_cast<double>(la.count());
      } else {
        const auto ma = internal::TimeMean(la);
        const auto mb = internal::TimeMean(lb);
        for (std::size_t k = 0; k < ma.size(); ++k) acc += std::abs(ma[k] - mb[k]);
        acc /= static_cast<double>(ma.size());
      }
      r.layers.push_back({la.name, acc});
      r.distance += acc;
    }
    return r;
  }

  DistanceResult Distance(const BinauralSignal& x1,
                          const BinauralSignal& x2) const {
    return Compare(Activations(x1), Activations(x2));
  }

  struct Gradient {
    double distance = 0.0;
    BinauralSignal d_x1;  // dD/dx1, same shape as x1
  };

  // Distance and its gradient with respect to the samples of x1 (the model
  // runs in inference mode; L1 kinks use the zero subgradient).
  Gradient DistanceGradient(const BinauralSignal& x1,
                            const BinauralSignal& x2) const {
    const FeatureTensor f1 = extractor_.Extract(x1);
    DoaModel::Tape tape;
    model_->Forward({DoaModel::ToTensor(f1)}, false, &tape);
    const ActivationStack a = model_->Capture(tape, 0);
    const ActivationStack b = Activations(x2);
    const DistanceResult d = Compare(a, b);

    CaptureGradients inject;
    inject.layers.resize(a.layers.size());
    for (int idx : selected_) {
      const ActivationLayer& la = a.layers[idx];
      const ActivationLayer& lb = b.layers[idx];
      std::vector<double> g(la.values.size(), 0.0);
      if (d.alignment == Alignment::kStrictEqualLength) {
        const double scale = 1.0 / static_cast<double>(la.count());
        for (std::size_t k = 0; k < g.size(); ++k) {
          g[k] = scale * internal::Sign(la.values[k] - lb.values[k]);
        }
      } else {
        const auto ma = internal::TimeMean(la);
        const auto mb = internal::TimeMean(lb);
        const double scale = 1.0 / (static_cast<double>(ma.size()) * la.frames);
        for (int t = 0; t < la.frames; ++t) {
          for (int bnd = 0; bnd < la.bands; ++bnd) {
            for (int c = 0; c < la.channels; ++c) {
              const std::size_t m = static_cast<std::size_t>(bnd) * la.channels + c;
              g[la.index(t, bnd, c)] = scale * internal::Sign(ma[m] - mb[m]);
            }
          }
        }
      }
      inject.layers[idx] = std::move(g);
    }
    auto d_input = model_->Backward(tape, {}, {}, {inject}, true, nullptr);
    FeatureTensor d_feat(f1.frames, f1.bins, f1.channels);
    d_feat.data.assign((*d_input)[0].data.begin(), (*d_input)[0].data.end());
    return {d.distance, extractor_.Backward(x1, d_feat)};
  }

  // Pairwise distances. Activations are computed once per signal.
  std::vector<std::vector<double>> DistanceMatrix(
      const std::vector<BinauralSignal>& signals) const {
    Require(signals.size() >= 2, "distance matrix needs at least 2 signals");
    std::vector<ActivationStack> stacks;
    for (std::size_t i = 0; i < signals.size(); ++i) {
      try {
        stacks.push_back(Activations(signals[i]));
      } catch (const Error& e) {
        Fail(e.code(), "signal " + std::to_string(i) + ": " + e.what());
      }
    }
    const std::size_t n = signals.size();
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        try {
          m[i][j] = m[j][i] = Compare(stacks[i], stacks[j]).distance;
        } catch (const Error& e) {
          Fail(e.code(), "pair (" + std::to_string(i) + ", " +
                             std::to_string(j) + "): " + e.what());
        }
      }
    }
    return m;
  }

 private:
  Alignment Resolve(const ActivationStack& a, const ActivationStack& b) const {
    const bool equal = a.layers.front().frames == b.layers.front().frames;
    switch (cfg_.alignment) {
      case Alignment::kStrictEqualLength:
        if (!equal) {
          Fail(ErrorCode::kShapeMismatch,
               "inputs have different frame counts (" +
                   std::to_string(a.layers.front().frames) + " vs " +
                   std::to_string(b.layers.front().frames) +
                   "); use time_pooled alignment");
        }
        return Alignment::kStrictEqualLength;
      case Alignment::kTimePooled:
        return Alignment::kTimePooled;
      case Alignment::kAuto:
        return equal ? Alignment::kStrictEqualLength : Alignment::kTimePooled;
    }
    return Alignment::kTimePooled;
  }

  std::shared_ptr<const DoaModel> model_;
  MetricConfig cfg_;
  FeatureExtractor extractor_;
  std::vector<int> selected_;
};

}  // namespace dplm

#endif  // DPLM_METRIC_DEEP_FEATURE_DISTANCE_H_
