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

#ifndef DPLM_TRAINING_TRAINER_H_
#define DPLM_TRAINING_TRAINER_H_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dplm/core/error.h"
#include "dplm/core/random.h"
#include "dplm/eval/stats.h"
#include "dplm/model/doa_model.h"
#include "dplm/model/inference.h"
#include "dplm/nn/adam.h"
#include "dplm/training/dataset.h"
#include "dplm/training/loss.h"

namespace dplm {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 32;
  double alpha = 0.25;
  int epochs = 100;
  int patience = 10;  // epochs without validation improvement
  double excerpt_sec = 3.0;
  double train_fraction = 0.8;
  double snr_min_db = 0.0;
  double snr_max_db = 30.0;
  std::uint64_t seed = 0;
  double bn_momentum = 0.1;
  // Anneals the learning rate to zero over `epochs` on a half cosine.
  bool cosine_decay = false;

  void Validate() const {
    if (!(learning_rate > 0) || batch_size <= 0 || epochs <= 0 ||
        patience <= 0 || !(excerpt_sec > 0) || !(bn_momentum > 0)) {
      Fail(ErrorCode::kInvalidArgument, "training hyperparameters must be positive");
    }
    Require(alpha >= 0.0 && alpha < 1.0, "alpha must be in [0, 1)");
    Require(train_fraction > 0.0 && train_fraction < 1.0,
            "train fraction must be in (0, 1)");
    Require(snr_min_db <= snr_max_db, "snr range is empty");
  }
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_rmse_deg = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  double best_val_rmse_deg = 0.0;
  bool stopped_early = false;
};

struct EvalSummary {
  double loss = 0.0;
  double rmse_deg = 0.0;
};

// Inference-mode loss and folded-azimuth RMSE over a set of examples. Moving
// models are scored on every frame, static models once per example.
inline EvalSummary EvaluateExamples(const DoaModel& model,
                                    const std::vector<Example>& examples,
                                    double alpha) {
  Require(!examples.empty(), "empty evaluation split");
  const ModelConfig& cfg = model.config();
  std::vector<SourceLocation> pred, truth;
  double loss = 0.0;
  for (const auto& ex : examples) {
    const InferenceResult r = RunModel(model, ex.features, false);
    loss += CombinedLoss(r.frames, ex.truths, cfg.variant, alpha, cfg.grid);
    const auto decoded = DecodeDoa(r.frames, cfg.grid, cfg.variant);
    for (std::size_t i = 0; i < decoded.size(); ++i) {
      pred.push_back(decoded[i]);
      truth.push_back(ex.truths[i].location);
    }
  }
  return {loss / examples.size(), RmseFoldedAzimuthDeg(pred, truth)};
}

// Minibatch training with Adam. The best validation epoch (lowest folded
// RMSE, then lowest loss) is restored into `model` on return. Fully
// deterministic for a given seed.
inline TrainResult Train(
    DoaModel* model, const std::vector<Example>& train,
    const std::vector<Example>& val, const TrainConfig& cfg,
    const std::function<void(const EpochMetrics&)>& on_epoch = {}) {
  cfg.Validate();
  if (train.empty()) Fail(ErrorCode::kInvalidArgument, "empty training split");
  if (val.empty()) Fail(ErrorCode::kInvalidArgument, "empty validation split");
  const ModelConfig& mcfg = model->config();
  for (const auto& ex : train) {
    const std::size_t want =
        mcfg.variant == Variant::kStatic ? 1 : static_cast<std::size_t>(ex.features.frames);
    if (ex.truths.size() != want) {
      Fail(ErrorCode::kShapeMismatch,
           "example '" + ex.id + "' labels do not match the model variant");
    }
  }

  Rng rng(cfg.seed);
  nn::Adam adam(model->parameters(), {.learning_rate = cfg.learning_rate});
  nn::Gradients grads(model->parameters());
  TrainResult result;
  std::vector<nn::Parameter> best = model->parameters().all();
  double best_rmse = std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.cosine_decay) {
      const double progress = static_cast<double>(epoch - 1) / cfg.epochs;
      adam.set_learning_rate(cfg.learning_rate * 0.5 *
                             (1.0 + std::cos(std::numbers::pi * progress)));
    }
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.Index(i)]);
    }
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      nn::Batch input;
      for (std::size_t i = start; i < stop; ++i) {
        input.push_back(DoaModel::ToTensor(train[order[i]].features));
      }
      DoaModel::Tape tape;
      const ModelOutput out = model->Forward(input, /*training=*/true, &tape);
      const double inv_b = 1.0 / static_cast<double>(input.size());
      std::vector<nn::RowMatrix> d_az, d_el;
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < input.size(); ++i) {
        const Example& ex = train[order[start + i]];
        const nn::RowMatrix* el =
            out.elevation_logits.empty() ? nullptr : &out.elevation_logits[i];
        LossResult loss = CombinedLoss(out.azimuth_logits[i], el, ex.truths,
                                       mcfg.variant, cfg.alpha, mcfg.grid);
        if (!std::isfinite(loss.total)) {
          std::ostringstream os;
          os << "non-finite loss at epoch " << epoch << ", batch " << batches
             << ", example '" << ex.id << "' (cross-entropy "
             << loss.cross_entropy << ", haversine " << loss.haversine << ")";
          Fail(ErrorCode::kNumerical, os.str());
        }
        batch_loss += loss.total * inv_b;
        d_az.push_back(loss.d_azimuth_logits * inv_b);
        if (el != nullptr) d_el.push_back(loss.d_elevation_logits * inv_b);
      }
      grads.Zero();
      model->Backward(tape, d_az, d_el, {}, false, &grads);
      adam.Step(&model->parameters(), grads);
      model->UpdateRunningStats(tape, cfg.bn_momentum);
      epoch_loss += batch_loss;
      ++batches;
    }
    const EvalSummary v = EvaluateExamples(*model, val, cfg.alpha);
    EpochMetrics m{epoch, epoch_loss / batches, v.loss, v.rmse_deg};
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
    if (v.rmse_deg < best_rmse || (v.rmse_deg == best_rmse && v.loss < best_loss)) {
      best_rmse = v.rmse_deg;
      best_loss = v.loss;
      best = model->parameters().all();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  model->parameters().all() = best;
  result.best_val_rmse_deg = best_rmse;
  return result;
}

// Metrics log. The first line is a comment carrying provenance.
inline std::string FormatMetricsCsv(const std::vector<EpochMetrics>& history,
                                    const std::string& config_hash,
                                    std::uint64_t seed) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << " seed=" << seed << "\n";
  os << "epoch,train_loss,val_loss,val_rmse_deg\n";
  char buf[128];
  for (const auto& m : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", m.epoch,
                  m.train_loss, m.val_loss, m.val_rmse_deg);
    os << buf;
  }
  return os.str();
}

}  // namespace dplm

#endif  // DPLM_TRAINING_TRAINER_H_
