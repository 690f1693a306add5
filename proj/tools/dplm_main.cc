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

// Command-line front end: dataset rendering, training, evaluation and the
// distance metric.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dplm/audio/spatialize.h"
#include "dplm/audio/synth.h"
#include "dplm/audio/wav.h"
#include "dplm/core/error.h"
#include "dplm/core/hash.h"
#include "dplm/cues/cues.h"
#include "dplm/eval/evaluation.h"
#include "dplm/metric/deep_feature_distance.h"
#include "dplm/model/checkpoint.h"
#include "dplm/pipeline/experiment.h"
#include "dplm/pipeline/manifest.h"
#include "dplm/pipeline/runs.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dplm;

constexpr int kUsageExit = 2;

// Options shared by the commands that build an experiment configuration.
struct ExperimentFlags {
  std::string config_file;
  std::string preset = "desk";
  std::uint64_t seed = 0;
  std::string variant;
  int epochs = 0;
  double lr = 0.0;
  int batch_size = 0;
  int records = 0;
  int classes = 0;
  std::string dataset;
  std::string brirs;
  std::string output;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* records_opt = nullptr;
  CLI::Option* classes_opt = nullptr;
  CLI::Option* dataset_opt = nullptr;
  CLI::Option* brirs_opt = nullptr;
  CLI::Option* output_opt = nullptr;

  void Register(CLI::App* app) {
    app->add_option("--config", config_file, "JSON experiment config");
    app->add_option("--preset", preset, "Defaults: desk or full")
        ->check(CLI::IsMember({"desk", "full"}));
    seed_opt = app->add_option("--seed", seed, "Run seed");
    variant_opt = app->add_option("--variant", variant, "static or moving")
                      ->check(CLI::IsMember({"static", "moving"}));
    epochs_opt = app->add_option("--epochs", epochs, "Training epochs");
    lr_opt = app->add_option("--lr", lr, "Learning rate");
    batch_opt = app->add_option("--batch-size", batch_size, "Minibatch size");
    records_opt =
        app->add_option("--records", records, "Synthetic corpus size");
    classes_opt = app->add_option("--classes", classes,
                                  "Synthetic static azimuth classes");
    dataset_opt = app->add_option("--dataset", dataset, "Dataset manifest");
    brirs_opt = app->add_option("--brirs", brirs, "BRIR manifest");
    output_opt = app->add_option("--output", output, "Output directory");
  }

  // Preset, then config file, then flags given on the command line.
  ExperimentConfig Resolve() const {
    ExperimentConfig cfg = ExperimentConfig::Preset(preset);
    if (!config_file.empty()) ApplyConfigJson(ReadJsonFile(config_file), &cfg);
    if (seed_opt->count()) cfg.seed = seed;
    if (variant_opt->count()) cfg.model.variant = ParseVariant(variant);
    if (epochs_opt->count()) cfg.train.epochs = epochs;
    if (lr_opt->count()) cfg.train.learning_rate = lr;
    if (batch_opt->count()) cfg.train.batch_size = batch_size;
    if (records_opt->count()) cfg.corpus.n_records = records;
    if (classes_opt->count()) cfg.corpus.n_classes = classes;
    if (dataset_opt->count()) cfg.paths.dataset = dataset;
    if (brirs_opt->count()) cfg.paths.brirs = brirs;
    if (output_opt->count()) cfg.paths.output = output;
    cfg.Validate();
    return cfg;
  }
};

std::string Provenance(const std::string& hash, std::uint64_t seed) {
  return "config_hash=" + hash + " seed=" + std::to_string(seed);
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

// JSON goes to `out_path` when given, otherwise to stdout.
void EmitJson(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    WriteText(out_path, j.dump(2) + "\n");
    std::cerr << "wrote " << out_path << "\n";
  }
}

struct LoadedModel {
  std::shared_ptr<const DoaModel> model;
  std::string config_hash;
  std::uint64_t seed = 0;
};

LoadedModel LoadModel(const std::string& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  LoadedModel m;
  m.config_hash = ckpt.metadata.value("config_hash", std::string());
  m.seed = ckpt.metadata.value("seed", std::uint64_t{0});
  m.model = std::make_shared<const DoaModel>(std::move(ckpt.model));
  return m;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> ParseDoubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : SplitList(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      Fail(ErrorCode::kInvalidArgument, "not a number: " + item);
    }
  }
  return out;
}

MonoSignal LoadSourceRef(const std::string& ref, double duration_sec) {
  const auto n = static_cast<std::size_t>(duration_sec * kCanonicalSampleRate);
  if (IsSynthetic(ref)) return SynthesizeSource(SyntheticSeed(ref), n);
  return LoadMono(ref);
}

// ---------------------------------------------------------------------------

int RunMakeManifest(const ExperimentFlags& flags, const std::string& out_path) {
  const ExperimentConfig cfg = flags.Resolve();
  const auto records = MakeSyntheticManifest(CorpusOptions(cfg));
  const std::string hash = ConfigHash(cfg);
  std::ostringstream os;
  int train = 0;
  for (const auto& r : records) {
    json j = DatasetRecordToJson(r);
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    os << j.dump() << "\n";
    train += r.split == "train";
  }
  WriteText(out_path, os.str());
  std::cerr << "wrote " << records.size() << " records to " << out_path << "\n";
  EmitJson({{"manifest", out_path},
            {"records", records.size()},
            {"train", train},
            {"test", static_cast<int>(records.size()) - train},
            {"config_hash", hash},
            {"seed", cfg.seed}},
           "");
  return 0;
}

int RunSpatialize(const ExperimentFlags& flags) {
  const ExperimentConfig cfg = flags.Resolve();
  const Corpus corpus = LoadCorpus(cfg);
  const DatasetRenderer renderer(corpus.brirs, RenderOptionsFor(cfg));
  const std::string hash = ConfigHash(cfg);
  const std::string provenance = Provenance(hash, cfg.seed);
  fs::create_directories(cfg.paths.output);
  std::ostringstream index;
  for (const auto& r : corpus.records) {
    BinauralSignal x;
    try {
      x = renderer.Render(r);
    } catch (const Error& e) {
      Fail(e.code(), "record '" + r.id + "': " + e.what());
    }
    const std::string wav = (fs::path(cfg.paths.output) / (r.id + ".wav")).string();
    WriteWav(wav, x, provenance);
    json j = DatasetRecordToJson(r);
    j["wav"] = wav;
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    index << j.dump() << "\n";
  }
  const std::string index_path =
      (fs::path(cfg.paths.output) / "index.jsonl").string();
  WriteText(index_path, index.str());
  std::cerr << "rendered " << corpus.records.size() << " recordings into "
            << cfg.paths.output << "\n";
  EmitJson({{"index", index_path},
            {"recordings", corpus.records.size()},
            {"config_hash", hash},
            {"seed", cfg.seed}},
           "");
  return 0;
}

int RunTrain(const ExperimentFlags& flags) {
  const ExperimentConfig cfg = flags.Resolve();
  const std::string hash = ConfigHash(cfg);
  std::cerr << "training " << VariantName(cfg.model.variant) << " model, "
            << Provenance(hash, cfg.seed) << "\n";
  TrainingRun run = RunTraining(cfg, [](const EpochMetrics& m) {
    std::cerr << "epoch " << m.epoch << ": train_loss=" << m.train_loss
              << " val_loss=" << m.val_loss << " val_rmse=" << m.val_rmse_deg
              << " deg\n";
  });
  fs::create_directories(cfg.paths.output);
  const fs::path out(cfg.paths.output);
  const std::string ckpt = (out / "checkpoint.dplm").string();
  const std::string metrics = (out / "metrics.csv").string();
  const std::string config = (out / "config.json").string();
  SaveCheckpoint(ckpt, *run.model, run.metadata);
  WriteText(metrics, run.metrics_csv);
  WriteText(config, RunMetadata(cfg).dump(2) + "\n");
  std::cerr << "best epoch " << run.result.best_epoch << ", held-out RMSE "
            << run.result.best_val_rmse_deg << " deg\n";
  EmitJson({{"checkpoint", ckpt},
            {"metrics", metrics},
            {"best_epoch", run.result.best_epoch},
            {"best_val_rmse_deg", run.result.best_val_rmse_deg},
            {"stopped_early", run.result.stopped_early},
            {"config_hash", hash},
            {"seed", cfg.seed}},
           "");
  return 0;
}

int RunEvalDoa(const std::string& checkpoint, const std::string& dataset,
               const std::string& brirs, const std::string& split,
               const std::string& out_path) {
  Checkpoint ckpt = LoadCheckpoint(checkpoint);
  ExperimentConfig cfg = ConfigFromCheckpoint(ckpt);
  if (!dataset.empty()) cfg.paths.dataset = dataset;
  if (!brirs.empty()) cfg.paths.brirs = brirs;
  const Corpus corpus = LoadCorpus(cfg);
  const DatasetRenderer renderer(corpus.brirs, RenderOptionsFor(cfg));
  const auto examples =
      RenderSplit(renderer, corpus.records, split, ckpt.model.config());
  if (examples.empty()) {
    Fail(ErrorCode::kInvalidArgument, "no records in split '" + split + "'");
  }
  const EvalSummary s = EvaluateExamples(ckpt.model, examples, cfg.train.alpha);
  std::cerr << "folded-azimuth RMSE " << s.rmse_deg << " deg over "
            << examples.size() << " recordings\n";
  EmitJson({{"rmse_deg", s.rmse_deg},
            {"loss", s.loss},
            {"recordings", examples.size()},
            {"split", split},
            {"variant", VariantName(ckpt.model.config().variant)},
            {"config_hash", ckpt.metadata.value("config_hash", std::string())},
            {"seed", ckpt.metadata.value("seed", std::uint64_t{0})}},
           out_path);
  return 0;
}

MetricConfig MakeMetricConfig(const std::string& layers,
                              const std::string& alignment) {
  MetricConfig mc;
  mc.layer_names = SplitList(layers);
  mc.alignment = ParseAlignment(alignment);
  return mc;
}

int RunDist(const std::string& a, const std::string& b,
            const std::string& checkpoint, const std::string& layers,
            const std::string& alignment, bool per_layer,
            const std::string& out_path) {
  const LoadedModel m = LoadModel(checkpoint);
  const DeepFeatureMetric metric(m.model, MakeMetricConfig(layers, alignment));
  const DistanceResult d = metric.Distance(LoadBinaural(a), LoadBinaural(b));
  json j = {{"distance", d.distance},
            {"alignment", AlignmentName(d.alignment)},
            {"config_hash", m.config_hash},
            {"seed", m.seed}};
  if (per_layer) {
    json layers_json = json::object();
    for (const auto& l : d.layers) layers_json[l.name] = l.value;
    j["layers"] = layers_json;
  }
  EmitJson(j, out_path);
  return 0;
}

int RunCues(const std::string& wav, const CueConfig& cfg,
            const std::string& out_path) {
  const auto frames = ExtractCues(LoadBinaural(wav), cfg);
  std::ostringstream os;
  os << "frame,itd_us,ild_db,iacc\n";
  for (const auto& f : frames) {
    os << f.frame_index << "," << f.itd_s * 1e6 << "," << f.ild_db << ","
       << f.iacc << "\n";
  }
  std::cerr << frames.size() << " voiced frames\n";
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    const json c = {{"frame_len", cfg.frame_len},
                    {"hop", cfg.hop},
                    {"max_lag_s", cfg.max_lag_s},
                    {"silence_dbfs", cfg.silence_dbfs}};
    WriteText(out_path,
              "# " + Provenance(HashString(c.dump()), 0) + "\n" + os.str());
  }
  return 0;
}

int RunSweep(double reference, const std::string& checkpoint,
             const std::string& azimuths, const std::string& source,
             double duration, const std::string& alignment,
             const std::string& out_path) {
  const LoadedModel m = LoadModel(checkpoint);
  const DeepFeatureMetric metric(m.model, MakeMetricConfig("", alignment));
  const SweepResult r = AngularSweep(
      metric, reference, ParseDoubles(azimuths), ParametricRenderer(LoadSourceRef(source, duration)));
  json j = SweepToJson(r);
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  if (r.spearman) {
    std::cerr << "reference " << reference << " deg: spearman " << *r.spearman
              << "\n";
  }
  EmitJson(j, out_path);
  return 0;
}

int RunFramewise(const std::string& static_ckpt, const std::string& moving_ckpt,
                 const std::string& recording, const std::string& trajectory,
                 const std::string& intervals, const std::string& source,
                 double duration, const std::string& out_path) {
  const LoadedModel s = LoadModel(static_ckpt);
  const LoadedModel mv = LoadModel(moving_ckpt);
  std::optional<Trajectory> traj;
  BinauralSignal x;
  if (!recording.empty()) {
    if (trajectory.empty()) {
      Fail(ErrorCode::kInvalidArgument, "--recording needs --trajectory");
    }
    const json tj = ReadJsonFile(trajectory);
    std::vector<Keyframe> keys;
    for (const auto& k : tj.at("keyframes")) {
      keys.push_back({k.at(0).get<double>(),
                      SourceLocation::FromDegrees(
                          k.at(1).get<double>(),
                          k.size() > 2 ? k.at(2).get<double>() : 0.0)});
    }
    traj = Trajectory(std::move(keys), tj.at("duration_sec").get<double>());
    x = LoadBinaural(recording);
  } else {
    traj = IntervalTrajectory(ParseDoubles(intervals), duration);
    x = SpatializeParametric(LoadSourceRef(source, duration), *traj);
  }
  const FramewiseReport r = FramewiseComparison(*s.model, *mv.model, x, *traj);
  std::cerr << "framewise RMSE: moving " << r.rmse_moving_deg
            << " deg, static whole " << r.rmse_static_whole_deg
            << " deg, static per-interval " << r.rmse_static_interval_deg
            << " deg\n";
  json j = FramewiseToJson(r);
  j["static_checkpoint"] = {{"config_hash", s.config_hash}, {"seed", s.seed}};
  j["moving_checkpoint"] = {{"config_hash", mv.config_hash}, {"seed", mv.seed}};
  EmitJson(j, out_path);
  return 0;
}

int RunCorrelate(const std::string& ratings, const std::string& metric_name,
                 const std::string& checkpoint, const std::string& alignment,
                 const std::string& out_path) {
  const auto records = LoadRatingsCsv(ratings);
  RecordDistance distance;
  std::optional<LoadedModel> model;
  std::unique_ptr<DeepFeatureMetric> metric;
  if (metric_name == "dplm") {
    if (checkpoint.empty()) {
      Fail(ErrorCode::kInvalidArgument, "--metric dplm needs --checkpoint");
    }
    model = LoadModel(checkpoint);
    metric = std::make_unique<DeepFeatureMetric>(model->model,
                                                 MakeMetricConfig("", alignment));
    distance = [&](const RatingRecord& r) {
      return metric->Distance(LoadBinaural(r.reference_wav),
                              LoadBinaural(r.test_wav))
          .distance;
    };
  } else {
    distance = [](const RatingRecord& r) {
      return CueDistance(LoadBinaural(r.reference_wav), LoadBinaural(r.test_wav));
    };
  }
  const CorrelationReport report = CorrelateRatings(records, distance);
  for (const auto& f : report.missing_files) {
    std::cerr << "missing file: " << f << "\n";
  }
  for (const auto& s : report.studies) {
    std::cerr << "study " << s.study_id << ": ";
    if (s.spearman) {
      std::cerr << "spearman " << *s.spearman << "\n";
    } else {
      std::cerr << "skipped (" << s.skipped_reason << ")\n";
    }
  }
  json j = CorrelationToJson(report);
  j["metric"] = metric_name;
  const CueWeights w;
  const json cue_params = {{"itd", w.itd}, {"ild", w.ild}, {"iacc", w.iacc},
                           {"itd_norm_s", w.itd_norm_s},
                           {"ild_norm_db", w.ild_norm_db}};
  j["config_hash"] = model ? model->config_hash : HashString(cue_params.dump());
  j["seed"] = model ? model->seed : 0;
  EmitJson(j, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binaural localization model and deep-feature spatial audio metric"};
  app.require_subcommand(1);

  ExperimentFlags manifest_flags, spatialize_flags, train_flags;
  std::string manifest_out;
  auto* make_manifest = app.add_subcommand(
      "make-manifest", "Write a synthetic dataset manifest");
  manifest_flags.Register(make_manifest);
  make_manifest->add_option("--out", manifest_out, "Manifest path")->required();

  auto* spatialize = app.add_subcommand(
      "spatialize", "Render a dataset manifest into binaural WAV files");
  spatialize_flags.Register(spatialize);

  auto* train = app.add_subcommand("train", "Train a localization model");
  train_flags.Register(train);

  std::string checkpoint, dataset, brirs, split = "test", out_path;
  auto* eval_doa = app.add_subcommand("eval-doa", "Held-out localization RMSE");
  eval_doa->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eval_doa->add_option("--dataset", dataset, "Dataset manifest");
  eval_doa->add_option("--brirs", brirs, "BRIR manifest");
  eval_doa->add_option("--split", split, "train or test")
      ->check(CLI::IsMember({"train", "test"}));
  eval_doa->add_option("--out", out_path, "JSON output file");

  std::string wav_a, wav_b, layers, alignment = "auto";
  bool per_layer = false;
  auto* dist = app.add_subcommand("dist", "Deep-feature distance of two recordings");
  dist->add_option("a", wav_a, "First binaural WAV")->required();
  dist->add_option("b", wav_b, "Second binaural WAV")->required();
  dist->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  dist->add_option("--layers", layers, "Comma-separated capture layers");
  dist->add_option("--alignment", alignment,
                   "strict_equal_length, time_pooled or auto");
  dist->add_flag("--per-layer", per_layer, "Include per-layer terms");
  dist->add_option("--out", out_path, "JSON output file");

  std::string cue_wav;
  CueConfig cue_cfg;
  double max_lag_ms = 1.0;
  auto* cues = app.add_subcommand("cues", "Per-frame ITD, ILD and IACC as CSV");
  cues->add_option("wav", cue_wav, "Binaural WAV")->required();
  cues->add_option("--frame-len", cue_cfg.frame_len, "Frame length (samples)");
  cues->add_option("--hop", cue_cfg.hop, "Hop (samples)");
  cues->add_option("--max-lag-ms", max_lag_ms, "Maximum ITD lag (ms)");
  cues->add_option("--out", out_path, "CSV output file");

  double reference = 0.0, duration = 1.0;
  std::string azimuths = "-90,-75,-60,-45,-30,-15,0,15,30,45,60,75,90";
  std::string source = "synth:1";
  auto* sweep = app.add_subcommand("sweep", "Distance against angular separation");
  sweep->add_option("--reference", reference, "Reference azimuth (deg)")
      ->required();
  sweep->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  sweep->add_option("--azimuths", azimuths, "Comma-separated test azimuths");
  sweep->add_option("--source", source, "Source WAV or synth:<seed>");
  sweep->add_option("--duration", duration, "Rendered length (s)");
  sweep->add_option("--alignment", alignment, "Metric alignment");
  sweep->add_option("--out", out_path, "JSON output file");

  std::string static_ckpt, moving_ckpt, recording, trajectory;
  std::string intervals = "-60,0,60";
  double fw_duration = 1.5;
  auto* framewise = app.add_subcommand(
      "framewise", "Framewise static versus moving localization");
  framewise->add_option("--static-checkpoint", static_ckpt)->required();
  framewise->add_option("--moving-checkpoint", moving_ckpt)->required();
  framewise->add_option("--recording", recording, "Binaural WAV");
  framewise->add_option("--trajectory", trajectory,
                        "Trajectory JSON for --recording");
  framewise->add_option("--intervals", intervals,
                        "Azimuths of a synthesized piecewise-constant path");
  framewise->add_option("--source", source, "Source WAV or synth:<seed>");
  framewise->add_option("--duration", fw_duration, "Synthesized length (s)");
  framewise->add_option("--out", out_path, "JSON output file");

  std::string ratings, metric_name = "dplm";
  auto* correlate = app.add_subcommand(
      "correlate", "Correlate distances with listening-test ratings");
  correlate->add_option("--ratings", ratings, "Ratings CSV")->required();
  correlate->add_option("--metric", metric_name, "dplm or cue")
      ->check(CLI::IsMember({"dplm", "cue"}));
  correlate->add_option("--checkpoint", checkpoint, "Model checkpoint");
  correlate->add_option("--alignment", alignment, "Metric alignment");
  correlate->add_option("--out", out_path, "JSON output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageExit;
  }

  try {
    if (*make_manifest) return RunMakeManifest(manifest_flags, manifest_out);
    if (*spatialize) return RunSpatialize(spatialize_flags);
    if (*train) return RunTrain(train_flags);
    if (*eval_doa) return RunEvalDoa(checkpoint, dataset, brirs, split, out_path);
    if (*dist) {
      return RunDist(wav_a, wav_b, checkpoint, layers, alignment, per_layer,
                     out_path);
    }
    if (*cues) {
      cue_cfg.max_lag_s = max_lag_ms * 1e-3;
      return RunCues(cue_wav, cue_cfg, out_path);
    }
    if (*sweep) {
      return RunSweep(reference, checkpoint, azimuths, source, duration,
                      alignment, out_path);
    }
    if (*framewise) {
      return RunFramewise(static_ckpt, moving_ckpt, recording, trajectory,
                          intervals, source, fw_duration, out_path);
    }
    if (*correlate) {
      return RunCorrelate(ratings, metric_name, checkpoint, alignment, out_path);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what()
              << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsageExit;
}
