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

#ifndef DPLM_MODEL_CONFIG_H_
#define DPLM_MODEL_CONFIG_H_

#include <string>

#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

enum class Variant { kStatic, kMoving };
enum class Heads { kAzimuthOnly, kAzimuthAndElevation };

inline std::string VariantName(Variant v) {
  return v == Variant::kStatic ? "static" : "moving";
}

inline Variant ParseVariant(const std::string& name) {
  if (name == "static") return Variant::kStatic;
  if (name == "moving") return Variant::kMoving;
  Fail(ErrorCode::kInvalidArgument, "unknown variant: " + name);
}

inline std::string HeadsName(Heads h) {
  return h == Heads::kAzimuthOnly ? "azimuth_only" : "azimuth_and_elevation";
}

inline Heads ParseHeads(const std::string& name) {
  if (name == "azimuth_only") return Heads::kAzimuthOnly;
  if (name == "azimuth_and_elevation") return Heads::kAzimuthAndElevation;
  Fail(ErrorCode::kInvalidArgument, "unknown heads: " + name);
}

struct ModelConfig {
  int n_inception_blocks = 6;
  int base_filters = 64;     // width of each of the four block branches
  int lstm_layers = 2;
  int lstm_embedding = 64;   // per frame, both directions concatenated
  BinGrid grid;
  Variant variant = Variant::kMoving;
  Heads heads = Heads::kAzimuthOnly;
  int input_bins = 257;
  double leaky_slope = 0.01;
  unsigned long long init_seed = 0;

  void Validate() const {
    if (n_inception_blocks <= 0 || base_filters <= 0 || lstm_layers <= 0 ||
        lstm_embedding <= 0 || grid.n_azimuth <= 0 || grid.n_elevation <= 0 ||
        input_bins <= 0) {
      Fail(ErrorCode::kInvalidArgument, "model config counts must be positive");
    }
    if (lstm_embedding % 2 != 0) {
      Fail(ErrorCode::kInvalidArgument, "lstm_embedding must be even");
    }
    if ((input_bins >> n_inception_blocks) < 1) {
      Fail(ErrorCode::kInvalidArgument,
           "too many pooling blocks for the input frequency resolution");
    }
    if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
      Fail(ErrorCode::kInvalidArgument, "leaky_slope must be in [0, 1)");
    }
  }

  // Frequency bands left after the feature block.
  int output_bins() const { return input_bins >> n_inception_blocks; }
  int block_channels() const { return 4 * base_filters; }
};

}  // namespace dplm

#endif  // DPLM_MODEL_CONFIG_H_
