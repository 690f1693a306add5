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

#ifndef DPLM_PIPELINE_RUNS_H_
#define DPLM_PIPELINE_RUNS_H_

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dplm/audio/spatialize.h"
#include "dplm/audio/synth.h"
#include "dplm/audio/types.h"
#include "dplm/eval/evaluation.h"
#include "dplm/model/checkpoint.h"
#include "dplm/model/doa_model.h"
#include "dplm/pipeline/experiment.h"
#include "dplm/pipeline/manifest.h"
#include "dplm/training/dataset.h"
#include "dplm/training/trainer.h"
#include "json.hpp"

namespace dplm {

struct Corpus {
  std::vector<BrirRecord> brirs;
  std::vector<DatasetRecord> records;
};

// The configured dataset manifest, or the seeded synthetic corpus.
inline Corpus LoadCorpus(const ExperimentConfig& cfg) {
  Corpus c;
  if (!cfg.paths.brirs.empty()) c.brirs = LoadBrirManifest(cfg.paths.brirs);
  if (cfg.paths.dataset.empty()) {
    c.records = MakeSyntheticManifest(CorpusOptions(cfg));
    return c;
  }
  std::set<std::string> ids;
  for (const auto& b : c.brirs) ids.insert(b.id);
  c.records = LoadDatasetManifest(cfg.paths.dataset, ids);
  return c;
}

inline RenderOptions RenderOptionsFor(const ExperimentConfig& cfg) {
  RenderOptions o;
  o.excerpt_sec = cfg.train.excerpt_sec;
  return o;
}

inline std::vector<Example> RenderSplit(const DatasetRenderer& renderer,
                                        const std::vector<DatasetRecord>& records,
                                        const std::string& split,
                                        const ModelConfig& model) {
  std::vector<Example> out;
  for (const auto& r : records) {
    if (r.split != split) continue;
    try {
      out.push_back(renderer.MakeExample(r, model.variant, model.grid));
    } catch (const Error& e) {
      Fail(e.code(), "record '" + r.id + "': " + e.what());
    }
  }
  return out;
}

// Provenance stored with every artifact.
inline nlohmann::json RunMetadata(const ExperimentConfig& cfg) {
  return {{"config_hash", ConfigHash(cfg)},
          {"seed", cfg.seed},
          {"config", ExperimentConfigToJson(cfg)}};
}

struct TrainingRun {
  std::unique_ptr<DoaModel> model;
  TrainResult result;
  std::string metrics_csv;
  nlohmann::json metadata;
};

// Renders the corpus, trains a fresh model and returns the best-validation
// weights with a metrics log. The test split doubles as validation split.
inline TrainingRun RunTraining(
    const ExperimentConfig& cfg,
    const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  cfg.Validate();
  const Corpus corpus = LoadCorpus(cfg);
  const DatasetRenderer renderer(corpus.brirs, RenderOptionsFor(cfg));
  const ModelConfig mc = cfg.resolved_model();
  const auto train = RenderSplit(renderer, corpus.records, "train", mc);
  const auto val = RenderSplit(renderer, corpus.records, "test", mc);
  if (train.empty() || val.empty()) {
    Fail(ErrorCode::kInvalidArgument, "corpus has an empty train or test split");
  }
  TrainingRun run;
  run.model = std::make_unique<DoaModel>(mc);
  run.result = Train(run.model.get(), train, val, cfg.resolved_train(), on_epoch);
  run.metadata = RunMetadata(cfg);
  run.metadata["best_epoch"] = run.result.best_epoch;
  run.metadata["best_val_rmse_deg"] = run.result.best_val_rmse_deg;
  run.metrics_csv =
      FormatMetricsCsv(run.result.history, ConfigHash(cfg), cfg.seed);
  return run;
}

// Rebuilds the experiment a checkpoint was trained with.
inline ExperimentConfig ConfigFromCheckpoint(const Checkpoint& ckpt) {
  ExperimentConfig cfg = ExperimentConfig::Full();
  if (ckpt.metadata.contains("config")) {
    ApplyConfigJson(ckpt.metadata["config"], &cfg);
  }
  cfg.model = ckpt.model.config();
  return cfg;
}

// Parametric rendering of fixed content at any direction.
inline DirectionRenderer ParametricRenderer(MonoSignal source,
                                            HeadModel head = {}) {
  return [source = std::move(source), head](const SourceLocation& loc) {
    return SpatializeParametric(source, loc, head);
  };
}

// Source held at each azimuth for an equal share of the duration, with
// `ramp_sec` transitions.
inline Trajectory IntervalTrajectory(const std::vector<double>& azimuths_deg,
                                     double duration_sec,
                                     double ramp_sec = 0.02) {
  Require(!azimuths_deg.empty(), "need at least one interval");
  std::vector<Keyframe> keys;
  const int n = static_cast<int>(azimuths_deg.size());
  for (int i = 0; i < n; ++i) {
    const double t0 = duration_sec * i / n;
    const double t1 = duration_sec * (i + 1) / n;
    const auto loc = SourceLocation::FromDegrees(azimuths_deg[i]);
    keys.push_back({i == 0 ? 0.0 : t0 + ramp_sec, loc});
    keys.push_back({t1, loc});
  }
  return Trajectory(std::move(keys), duration_sec);
}

}  // namespace dplm

#endif  // DPLM_PIPELINE_RUNS_H_
