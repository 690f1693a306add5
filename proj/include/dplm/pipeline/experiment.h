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

#ifndef DPLM_PIPELINE_EXPERIMENT_H_
#define DPLM_PIPELINE_EXPERIMENT_H_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dplm/core/error.h"
#include "dplm/core/hash.h"
#include "dplm/core/random.h"
#include "dplm/metric/deep_feature_distance.h"
#include "dplm/model/checkpoint.h"
#include "dplm/model/config.h"
#include "dplm/training/dataset.h"
#include "dplm/training/trainer.h"
#include "json.hpp"

namespace dplm {

struct PathsConfig {
  std::string sources;  // directory of source WAVs (optional)
  std::string brirs;    // BRIR manifest (optional)
  std::string dataset;  // dataset manifest; empty means a synthetic corpus
  std::string noise;    // directory of noise WAVs (optional)
  std::string output = "out";
};

// Synthetic corpus used when no dataset manifest is given.
struct CorpusConfig {
  int n_records = 200;
  int n_classes = 8;
  double max_azimuth_deg = 82.5;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  PathsConfig paths;
  ModelConfig model;
  TrainConfig train;
  MetricConfig metric;
  CorpusConfig corpus;

  // Full-size network, 3 s excerpts, lr 1e-4.
  static ExperimentConfig Full() { return {}; }

  // Scaled down to train on one CPU core in minutes.
  static ExperimentConfig Desk() {
    ExperimentConfig c;
    c.model.base_filters = 4;
    c.model.lstm_embedding = 16;
    c.train.learning_rate = 5e-3;
    c.train.cosine_decay = true;
    c.train.excerpt_sec = 0.5;
    c.train.epochs = 40;
    c.train.patience = 40;
    c.corpus.n_records = 500;
    return c;
  }

  static ExperimentConfig Preset(const std::string& name) {
    if (name == "full") return Full();
    if (name == "desk") return Desk();
    Fail(ErrorCode::kInvalidArgument, "unknown preset: " + name);
  }

  // Every random stream of a run derives from `seed`.
  std::uint64_t model_seed() const { return DerivedSeed(0); }
  std::uint64_t corpus_seed() const { return DerivedSeed(1); }
  std::uint64_t train_seed() const { return DerivedSeed(2); }

  // The model and training configs with the derived seeds filled in.
  std::uint64_t DerivedSeed(int stream) const {
    Rng rng(seed);
    std::uint64_t v = 0;
    for (int i = 0; i <= stream; ++i) v = rng.NextU64();
    return v;
  }

  ModelConfig resolved_model() const {
    ModelConfig m = model;
    m.init_seed = model_seed();
    return m;
  }
  TrainConfig resolved_train() const {
    TrainConfig t = train;
    t.seed = train_seed();
    return t;
  }

  void Validate() const {
    model.Validate();
    train.Validate();
    Require(corpus.n_records > 0, "corpus.n_records must be positive");
    Require(corpus.n_classes > 0 && corpus.n_classes <= model.grid.n_azimuth,
            "corpus.n_classes must be in [1, n_azimuth]");
    Require(corpus.max_azimuth_deg > 0.0 && corpus.max_azimuth_deg <= 180.0,
            "corpus.max_azimuth_deg must be in (0, 180]");
    for (const auto* p : {&paths.sources, &paths.brirs, &paths.dataset,
                          &paths.noise}) {
      if (!p->empty() && !std::filesystem::exists(*p)) {
        Fail(ErrorCode::kIo, "configured path does not exist: " + *p);
      }
    }
  }
};

inline nlohmann::json TrainConfigToJson(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
          {"alpha", t.alpha},                 {"epochs", t.epochs},
          {"patience", t.patience},           {"excerpt_sec", t.excerpt_sec},
          {"train_fraction", t.train_fraction},
          {"snr_min_db", t.snr_min_db},       {"snr_max_db", t.snr_max_db},
          {"bn_momentum", t.bn_momentum},     {"cosine_decay", t.cosine_decay}};
}

inline nlohmann::json ExperimentConfigToJson(const ExperimentConfig& c) {
  nlohmann::json model = ModelConfigToJson(c.model);
  model.erase("init_seed");
  return {{"seed", c.seed},
          {"paths",
           {{"sources", c.paths.sources},
            {"brirs", c.paths.brirs},
            {"dataset", c.paths.dataset},
            {"noise", c.paths.noise},
            {"output", c.paths.output}}},
          {"model", model},
          {"train", TrainConfigToJson(c.train)},
          {"metric",
           {{"layer_names", c.metric.layer_names},
            {"alignment", AlignmentName(c.metric.alignment)}}},
          {"corpus",
           {{"n_records", c.corpus.n_records},
            {"n_classes", c.corpus.n_classes},
            {"max_azimuth_deg", c.corpus.max_azimuth_deg}}}};
}

// Overlays the keys present in `j` onto `c`; absent keys keep their values.
inline void ApplyConfigJson(const nlohmann::json& j, ExperimentConfig* c) {
  try {
    static const std::vector<std::string> kSections = {
        "seed", "paths", "model", "train", "metric", "corpus"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(kSections.begin(), kSections.end(), key) ==
          kSections.end()) {
        Fail(ErrorCode::kInvalidArgument, "unknown config key: " + key);
      }
    }
    c->seed = j.value("seed", c->seed);
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      c->paths.sources = p.value("sources", c->paths.sources);
      c->paths.brirs = p.value("brirs", c->paths.brirs);
      c->paths.dataset = p.value("dataset", c->paths.dataset);
      c->paths.noise = p.value("noise", c->paths.noise);
      c->paths.output = p.value("output", c->paths.output);
    }
    if (j.contains("model")) c->model = ModelConfigFromJson(j["model"], c->model);
    if (j.contains("train")) {
      const auto& t = j["train"];
      TrainConfig& tc = c->train;
      tc.learning_rate = t.value("learning_rate", tc.learning_rate);
      tc.batch_size = t.value("batch_size", tc.batch_size);
      tc.alpha = t.value("alpha", tc.alpha);
      tc.epochs = t.value("epochs", tc.epochs);
      tc.patience = t.value("patience", tc.patience);
      tc.excerpt_sec = t.value("excerpt_sec", tc.excerpt_sec);
      tc.train_fraction = t.value("train_fraction", tc.train_fraction);
      tc.snr_min_db = t.value("snr_min_db", tc.snr_min_db);
      tc.snr_max_db = t.value("snr_max_db", tc.snr_max_db);
      tc.bn_momentum = t.value("bn_momentum", tc.bn_momentum);
      tc.cosine_decay = t.value("cosine_decay", tc.cosine_decay);
    }
    if (j.contains("metric")) {
      const auto& m = j["metric"];
      c->metric.layer_names = m.value("layer_names", c->metric.layer_names);
      if (m.contains("alignment")) {
        c->metric.alignment = ParseAlignment(m["alignment"].get<std::string>());
      }
    }
    if (j.contains("corpus")) {
      const auto& s = j["corpus"];
      c->corpus.n_records = s.value("n_records", c->corpus.n_records);
      c->corpus.n_classes = s.value("n_classes", c->corpus.n_classes);
      c->corpus.max_azimuth_deg =
          s.value("max_azimuth_deg", c->corpus.max_azimuth_deg);
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("invalid config: ") + e.what());
  }
}

inline nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, path + ": invalid JSON: " + e.what());
  }
}

// Stable digest of the resolved configuration.
inline std::string ConfigHash(const ExperimentConfig& c) {
  return HashString(ExperimentConfigToJson(c).dump());
}

inline SyntheticDatasetOptions CorpusOptions(const ExperimentConfig& c) {
  SyntheticDatasetOptions o;
  o.n_records = c.corpus.n_records;
  o.variant = c.model.variant;
  o.azimuths_deg = EvenAzimuthsDeg(c.corpus.n_classes, c.corpus.max_azimuth_deg);
  o.max_azimuth_deg = c.corpus.max_azimuth_deg;
  o.excerpt_sec = c.train.excerpt_sec;
  o.snr_min_db = c.train.snr_min_db;
  o.snr_max_db = c.train.snr_max_db;
  o.train_fraction = c.train.train_fraction;
  o.seed = c.corpus_seed();
  return o;
}

}  // namespace dplm

#endif  // DPLM_PIPELINE_EXPERIMENT_H_
