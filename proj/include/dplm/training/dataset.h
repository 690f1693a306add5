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

#ifndef DPLM_TRAINING_DATASET_H_
#define DPLM_TRAINING_DATASET_H_

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dplm/audio/angles.h"
#include "dplm/audio/noise.h"
#include "dplm/audio/spatialize.h"
#include "dplm/audio/stft.h"
#include "dplm/audio/synth.h"
#include "dplm/audio/types.h"
#include "dplm/audio/wav.h"
#include "dplm/core/error.h"
#include "dplm/core/hash.h"
#include "dplm/core/random.h"
#include "dplm/model/config.h"
#include "dplm/pipeline/manifest.h"
#include "dplm/training/loss.h"

namespace dplm {

struct RenderOptions {
  double excerpt_sec = 3.0;
  int dft_size = 512;
  int hop = 256;
  HeadModel head;

  std::size_t excerpt_samples() const {
    return static_cast<std::size_t>(excerpt_sec * kCanonicalSampleRate + 0.5);
  }
};

// A rendered, featurized training item. Static examples carry one truth,
// moving examples one truth per STFT frame.
struct Example {
  std::string id;
  FeatureTensor features;
  std::vector<FrameTruth> truths;
};

inline std::uint64_t SyntheticSeed(const std::string& ref) {
  const std::string digits = ref.substr(sizeof(kSynthPrefix) - 1);
  try {
    return std::stoull(digits);
  } catch (const std::exception&) {
    return Fnv1a(digits);
  }
}

// Renders manifest records into binaural excerpts and labels.
class DatasetRenderer {
 public:
  DatasetRenderer(std::vector<BrirRecord> brirs, RenderOptions options)
      : options_(options), extractor_(options.dft_size, options.hop) {
    for (auto& b : brirs) brirs_.emplace(b.id, std::move(b));
  }

  const RenderOptions& options() const { return options_; }

  MonoSignal LoadSource(const std::string& ref) const {
    const std::size_t n = options_.excerpt_samples();
    if (IsSynthetic(ref)) return SynthesizeSource(SyntheticSeed(ref), n);
    MonoSignal src = LoadMono(ref);
    Require(!src.samples.empty(), "empty source file: " + ref);
    std::vector<double> fitted(n);
    for (std::size_t i = 0; i < n; ++i) {
      fitted[i] = src.samples[i % src.samples.size()];
    }
    src.samples = std::move(fitted);
    return src;
  }

  // Clean spatialized excerpt plus background noise at the record's SNR.
  BinauralSignal Render(const DatasetRecord& record) const {
    const MonoSignal src = LoadSource(record.source);
    BinauralSignal clean;
    if (record.trajectory) {
      clean = SpatializeParametric(src, *record.trajectory, options_.head);
    } else if (auto loc = ParseParametricId(*record.brir_id)) {
      clean = SpatializeParametric(src, *loc, options_.head);
    } else {
      clean = SpatializeBrir(src, GetBrir(*record.brir_id));
    }
    if (!record.noise || std::isinf(record.snr_db)) return clean;
    BinauralSignal noise;
    if (IsSynthetic(*record.noise)) {
      noise = SynthesizeSpatialNoise(SyntheticSeed(*record.noise), clean.size());
    } else {
      const WavData wav = ReadWav(*record.noise);
      // Mono noise files are presented diotically.
      const auto& l = wav.channels[0];
      const auto& r = wav.channels.size() > 1 ? wav.channels[1] : wav.channels[0];
      noise = FitNoiseLength(
          BinauralSignal(Resample(l, wav.sample_rate, kCanonicalSampleRate),
                         Resample(r, wav.sample_rate, kCanonicalSampleRate)),
          clean.size());
    }
    return MixNoise(clean, noise, record.snr_db);
  }

  SourceLocation StaticLocation(const DatasetRecord& record) const {
    Require(record.brir_id.has_value(), "record has no fixed direction");
    if (auto loc = ParseParametricId(*record.brir_id)) return *loc;
    const auto& b = brirs_.at(*record.brir_id);
    return SourceLocation::FromDegrees(b.azimuth_deg, b.elevation_deg);
  }

  // Per-frame directions at STFT frame centers.
  std::vector<SourceLocation> FrameLocations(const DatasetRecord& record,
                                             int frames) const {
    if (!record.trajectory) {
      return std::vector<SourceLocation>(frames, StaticLocation(record));
    }
    std::vector<double> times(frames);
    for (int t = 0; t < frames; ++t) {
      times[t] = std::min(FrameCenterSec(t, options_.dft_size, options_.hop,
                                         kCanonicalSampleRate),
                          record.trajectory->duration_sec());
    }
    return SampleTrajectory(*record.trajectory, times);
  }

  Example MakeExample(const DatasetRecord& record, Variant variant,
                      const BinGrid& grid) const {
    if (variant == Variant::kStatic && record.trajectory) {
      Fail(ErrorCode::kManifest, "record '" + record.id +
                                     "' has a trajectory but the static "
                                     "variant needs fixed-direction labels");
    }
    Example ex;
    ex.id = record.id;
    ex.features = extractor_.Extract(Render(record));
    if (variant == Variant::kStatic) {
      ex.truths.push_back(MakeTruth(StaticLocation(record), grid));
    } else {
      for (const auto& loc : FrameLocations(record, ex.features.frames)) {
        ex.truths.push_back(MakeTruth(loc, grid));
      }
    }
    return ex;
  }

 private:
  const Brir& GetBrir(const std::string& id) const {
    auto cached = cache_.find(id);
    if (cached != cache_.end()) return *cached->second;
    auto it = brirs_.find(id);
    if (it == brirs_.end()) Fail(ErrorCode::kManifest, "unknown brir_id " + id);
    const auto& r = it->second;
    auto brir = std::make_shared<Brir>(
        LoadBrir(r.path, SourceLocation::FromDegrees(r.azimuth_deg, r.elevation_deg),
                 r.room_id));
    return *cache_.emplace(id, brir).first->second;
  }

  RenderOptions options_;
  FeatureExtractor extractor_;
  std::map<std::string, BrirRecord> brirs_;
  mutable std::map<std::string, std::shared_ptr<Brir>> cache_;
};

// Parameters of the desk-scale synthetic corpus: speech-like synthetic
// sources on the parametric head model with spatial background noise.
struct SyntheticDatasetOptions {
  int n_records = 200;
  Variant variant = Variant::kStatic;
  std::vector<double> azimuths_deg;  // static class set
  double max_azimuth_deg = 85.0;     // moving trajectories stay frontal
  double excerpt_sec = 0.5;
  double snr_min_db = 0.0;
  double snr_max_db = 30.0;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

inline std::vector<double> EvenAzimuthsDeg(int count, double max_deg) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(count == 1 ? 0.0
                             : -max_deg + 2.0 * max_deg * i / (count - 1));
  }
  return out;
}

namespace internal {

inline Trajectory RandomTrajectory(Rng* rng, double duration, double max_deg) {
  const double kind = rng->Uniform();
  auto random_az = [&] { return rng->Uniform(-max_deg, max_deg); };
  std::vector<Keyframe> keys;
  if (kind < 0.2) {
    keys.push_back({0.0, SourceLocation::FromDegrees(random_az())});
  } else if (kind < 0.6) {
    // Smooth pan.
    const double start = random_az();
    const double end =
        std::clamp(start + rng->Uniform(-90.0, 90.0), -max_deg, max_deg);
    keys.push_back({0.0, SourceLocation::FromDegrees(start)});
    keys.push_back({duration, SourceLocation::FromDegrees(end)});
  } else {
    // Piecewise constant with quick transitions.
    const int segments = 2 + static_cast<int>(rng->Index(2));
    const double ramp = 0.02;
    double az = random_az();
    for (int s = 0; s < segments; ++s) {
      const double t0 = duration * s / segments;
      const double t1 = duration * (s + 1) / segments;
      keys.push_back({s > 0 ? t0 + ramp : 0.0, SourceLocation::FromDegrees(az)});
      keys.push_back({t1, SourceLocation::FromDegrees(az)});
      az = random_az();
    }
  }
  return Trajectory(std::move(keys), duration);
}

}  // namespace internal

inline std::vector<DatasetRecord> MakeSyntheticManifest(
    const SyntheticDatasetOptions& opts) {
  Require(opts.n_records > 0, "n_records must be positive");
  Require(opts.train_fraction > 0.0 && opts.train_fraction < 1.0,
          "train fraction must be in (0, 1)");
  if (opts.variant == Variant::kStatic) {
    Require(!opts.azimuths_deg.empty(), "static corpus needs azimuth classes");
  }
  Rng rng(opts.seed);
  std::vector<DatasetRecord> records;
  for (int i = 0; i < opts.n_records; ++i) {
    DatasetRecord r;
    r.id = "synth" + std::to_string(i);
    r.line = i + 1;
    r.source = std::string(kSynthPrefix) + std::to_string(rng.NextU64() >> 1);
    r.noise = std::string(kSynthPrefix) + std::to_string(rng.NextU64() >> 1);
    r.snr_db = rng.Uniform(opts.snr_min_db, opts.snr_max_db);
    if (opts.variant == Variant::kStatic) {
      r.brir_id = ParametricId(opts.azimuths_deg[i % opts.azimuths_deg.size()]);
    } else {
      r.trajectory =
          internal::RandomTrajectory(&rng, opts.excerpt_sec, opts.max_azimuth_deg);
    }
    records.push_back(std::move(r));
  }
  // Deterministic split: a seeded permutation, first fraction to training.
  std::vector<int> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.Index(i)]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::lround(opts.train_fraction * records.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    records[order[i]].split = i < n_train ? "train" : "test";
  }
  return records;
}

inline void WriteDatasetManifest(const std::string& path,
                                 const std::vector<DatasetRecord>& records) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write manifest: " + path);
  for (const auto& r : records) out << DatasetRecordToJson(r).dump() << "\n";
}

}  // namespace dplm

#endif  // DPLM_TRAINING_DATASET_H_
