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

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dplm/audio/angles.h"
#include "dplm/audio/stft.h"
#include "dplm/core/random.h"
#include "dplm/model/checkpoint.h"
#include "dplm/model/config.h"
#include "dplm/model/doa_model.h"
#include "dplm/model/inference.h"
#include "gtest/gtest.h"

namespace dplm {
namespace {

ModelConfig SmallConfig(Variant v = Variant::kMoving,
                        Heads h = Heads::kAzimuthOnly) {
  ModelConfig cfg;
  cfg.base_filters = 2;
  cfg.lstm_embedding = 8;
  cfg.variant = v;
  cfg.heads = h;
  cfg.init_seed = 17;
  return cfg;
}

FeatureTensor RandomFeatures(Rng* rng, int frames, int bins = 257) {
  FeatureTensor f(frames, bins);
  for (double& v : f.data) v = rng->Uniform(-1.0, 1.0);
  return f;
}

TEST(ModelConfigTest, FrequencyBandsAfterPooling) {
  ModelConfig cfg;
  EXPECT_EQ(cfg.output_bins(), 4);
  std::vector<int> seen;
  int f = cfg.input_bins;
  for (int b = 0; b < cfg.n_inception_blocks; ++b) seen.push_back(f /= 2);
  EXPECT_EQ(seen, (std::vector<int>{128, 64, 32, 16, 8, 4}));
}

TEST(ModelConfigTest, Validation) {
  ModelConfig cfg;
  cfg.base_filters = 0;
  EXPECT_THROW(DoaModel{cfg}, Error);
  cfg = ModelConfig();
  cfg.lstm_embedding = 7;
  EXPECT_THROW(DoaModel{cfg}, Error);
  cfg = ModelConfig();
  cfg.n_inception_blocks = 9;
  EXPECT_THROW(DoaModel{cfg}, Error);
  EXPECT_THROW(ParseVariant("rolling"), Error);
}

TEST(DoaModelTest, OutputAndCaptureShapes) {
  Rng rng(1);
  const DoaModel model(SmallConfig(Variant::kMoving, Heads::kAzimuthAndElevation));
  for (int frames : {1, 5, 12}) {
    const InferenceResult r = RunModel(model, RandomFeatures(&rng, frames), true);
    ASSERT_EQ(static_cast<int>(r.frames.size()), frames);
    for (const auto& f : r.frames) {
      EXPECT_EQ(f.azimuth_probs.size(), 50u);
      ASSERT_TRUE(f.elevation_probs.has_value());
      EXPECT_EQ(f.elevation_probs->size(), 25u);
      EXPECT_NEAR(std::accumulate(f.azimuth_probs.begin(),
                                  f.azimuth_probs.end(), 0.0),
                  1.0, 1e-6);
      EXPECT_NEAR(std::accumulate(f.elevation_probs->begin(),
                                  f.elevation_probs->end(), 0.0),
                  1.0, 1e-6);
    }
    const ActivationStack& s = *r.activations;
    ASSERT_EQ(s.layers.size(), 8u);
    const std::vector<int> bands = {128, 64, 32, 16, 8, 4, 1, 1};
    for (std::size_t l = 0; l < 8; ++l) {
      EXPECT_EQ(s.layers[l].name, model.CaptureLayerNames()[l]);
      EXPECT_EQ(s.layers[l].frames, frames);
      EXPECT_EQ(s.layers[l].bands, bands[l]);
      EXPECT_EQ(s.layers[l].channels, 8);  // 4 branches x 2, or the embedding
      EXPECT_EQ(s.layers[l].values.size(), s.layers[l].count());
      for (double v : s.layers[l].values) EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(DoaModelTest, FullScaleShapes) {
  ModelConfig cfg;
  cfg.init_seed = 2;
  const DoaModel model(cfg);
  Rng rng(2);
  const InferenceResult r = RunModel(model, RandomFeatures(&rng, 3), true);
  EXPECT_EQ(r.frames[0].azimuth_logits.size(), 50u);
  EXPECT_EQ(r.activations->layers[0].channels, 256);
  EXPECT_EQ(r.activations->layers[5].bands, 4);
  EXPECT_EQ(r.activations->layers[7].channels, 64);
}

TEST(DoaModelTest, ConstructionIsDeterministic) {
  const DoaModel a(SmallConfig());
  const DoaModel b(SmallConfig());
  ASSERT_EQ(a.parameters().all().size(), b.parameters().all().size());
  for (std::size_t i = 0; i < a.parameters().all().size(); ++i) {
    EXPECT_EQ(a.parameters().all()[i].shape, b.parameters().all()[i].shape);
    EXPECT_EQ(a.parameters().all()[i].value, b.parameters().all()[i].value);
  }
  ModelConfig other = SmallConfig();
  other.init_seed = 18;
  EXPECT_NE(DoaModel(other).parameters().all()[0].value,
            a.parameters().all()[0].value);
}

TEST(DoaModelTest, InferenceIsDeterministicAndCaptureIsObservational) {
  Rng rng(3);
  const DoaModel model(SmallConfig());
  const FeatureTensor f = RandomFeatures(&rng, 6);
  const InferenceResult a = RunModel(model, f, true);
  const InferenceResult b = RunModel(model, f, true);
  const InferenceResult c = RunModel(model, f, false);
  EXPECT_FALSE(c.activations.has_value());
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    EXPECT_EQ(a.frames[t].azimuth_logits, b.frames[t].azimuth_logits);
    EXPECT_EQ(a.frames[t].azimuth_logits, c.frames[t].azimuth_logits);
  }
  for (std::size_t l = 0; l < a.activations->layers.size(); ++l) {
    EXPECT_EQ(a.activations->layers[l].values, b.activations->layers[l].values);
  }
}

TEST(DoaModelTest, FeatureShapeMismatch) {
  Rng rng(4);
  const DoaModel model(SmallConfig());
  try {
    RunModel(model, RandomFeatures(&rng, 4, 129), false);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

// ---------------------------------------------------------------------------
// Decoding.

TEST(DecodeTest, OneHotDecodesToBinCenter) {
  const BinGrid grid;
  for (int k : {0, 7, 25, 49}) {
    std::vector<double> p(50, 0.0);
    p[k] = 1.0;
    const SourceLocation loc = DecodeProbabilities(p, std::nullopt, grid);
    EXPECT_NEAR(WrapAngle(loc.azimuth() - grid.azimuth_center(k)), 0.0, 1e-12);
  }
}

TEST(DecodeTest, SymmetricPairAroundZero) {
  const BinGrid grid;
  std::vector<double> p(50, 0.0);
  p[24] = p[25] = 0.5;  // centers -3.6 and 3.6 degrees
  EXPECT_NEAR(DecodeProbabilities(p, std::nullopt, grid).azimuth(), 0.0, 1e-12);
}

TEST(DecodeTest, WrapsAroundTheRear) {
  const BinGrid grid;
  std::vector<double> p(50, 0.0);
  p[0] = p[49] = 0.5;  // centers -176.4 and 176.4 degrees
  const double az = DecodeProbabilities(p, std::nullopt, grid).azimuth_deg();
  EXPECT_NEAR(std::abs(az), 180.0, 1e-9);
}

TEST(DecodeTest, ElevationIsWeightedMean) {
  const BinGrid grid;
  std::vector<double> p(50, 0.0);
  p[25] = 1.0;
  std::vector<double> q(25, 0.0);
  q[12] = 0.5;
  q[17] = 0.5;
  const SourceLocation loc = DecodeProbabilities(p, q, grid);
  EXPECT_NEAR(loc.elevation(),
              0.5 * grid.elevation_center(12) + 0.5 * grid.elevation_center(17),
              1e-12);
}

TEST(DecodeTest, ShiftInvariantInLogits) {
  Rng rng(5);
  const BinGrid grid;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> z(50);
    for (double& v : z) v = 3 * rng.Normal();
    auto shifted = z;
    const double c = rng.Uniform(-50.0, 50.0);
    for (double& v : shifted) v += c;
    const std::vector<PredictionFrame> a = {MakeFrame(0, z, std::nullopt)};
    const std::vector<PredictionFrame> b = {MakeFrame(0, shifted, std::nullopt)};
    EXPECT_NEAR(DecodeDoa(a, grid, Variant::kMoving)[0].azimuth(),
                DecodeDoa(b, grid, Variant::kMoving)[0].azimuth(), 1e-9);
  }
}

TEST(DecodeTest, StaticAveragesLogitsBeforeSoftmax) {
  const BinGrid grid;
  std::vector<double> z1(50, 0.0), z2(50, 0.0);
  z1[10] = 8.0;
  z2[30] = 4.0;
  const std::vector<PredictionFrame> frames = {MakeFrame(0, z1, std::nullopt),
                                               MakeFrame(1, z2, std::nullopt)};
  std::vector<double> mean(50, 0.0);
  mean[10] = 4.0;
  mean[30] = 2.0;
  const auto decoded = DecodeDoa(frames, grid, Variant::kStatic);
  ASSERT_EQ(decoded.size(), 1u);
  EXPECT_NEAR(decoded[0].azimuth(),
              DecodeProbabilities(Softmax(mean), std::nullopt, grid).azimuth(),
              1e-12);
  EXPECT_EQ(DecodeDoa(frames, grid, Variant::kMoving).size(), 2u);
}

// ---------------------------------------------------------------------------
// Checkpoints.

TEST(CheckpointTest, RoundTripIsBitExact) {
  const DoaModel model(
      SmallConfig(Variant::kStatic, Heads::kAzimuthAndElevation));
  const nlohmann::json meta = {{"seed", 7}, {"epochs", 3}};
  const std::string bytes = EncodeCheckpoint(model, meta);
  const Checkpoint back = DecodeCheckpoint(bytes);
  EXPECT_EQ(back.metadata, meta);
  EXPECT_EQ(back.model.config().variant, Variant::kStatic);
  EXPECT_EQ(back.model.config().heads, Heads::kAzimuthAndElevation);
  EXPECT_EQ(back.model.config().init_seed, 17u);
  for (std::size_t i = 0; i < model.parameters().all().size(); ++i) {
    EXPECT_EQ(model.parameters().all()[i].value,
              back.model.parameters().all()[i].value);
  }
  EXPECT_EQ(EncodeCheckpoint(back.model, meta), bytes);
}

TEST(CheckpointTest, EmbedsSchemaVersion) {
  const std::string bytes = EncodeCheckpoint(DoaModel(SmallConfig()), {});
  EXPECT_EQ(bytes.substr(0, 8), "DPLMCKPT");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 8, 4);
  EXPECT_EQ(version, kCheckpointSchemaVersion);
}

TEST(CheckpointTest, RejectsCorruptInput) {
  const std::string bytes = EncodeCheckpoint(DoaModel(SmallConfig()), {});
  auto code_of = [](const std::string& b) {
    try {
      DecodeCheckpoint(b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code_of("garbage"), ErrorCode::kCheckpoint);
  EXPECT_EQ(code_of(bytes.substr(0, bytes.size() - 8)), ErrorCode::kCheckpoint);
  EXPECT_EQ(code_of(bytes + "x"), ErrorCode::kCheckpoint);
  std::string wrong_version = bytes;
  wrong_version[8] = 9;
  EXPECT_EQ(code_of(wrong_version), ErrorCode::kCheckpoint);
  EXPECT_THROW(LoadCheckpoint("/nonexistent/model.dplm"), Error);
}

}  // namespace
}  // namespace dplm
