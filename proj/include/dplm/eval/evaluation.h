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

#ifndef DPLM_EVAL_EVALUATION_H_
#define DPLM_EVAL_EVALUATION_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dplm/audio/angles.h"
#include "dplm/audio/stft.h"
#include "dplm/audio/types.h"
#include "dplm/core/error.h"
#include "dplm/eval/stats.h"
#include "dplm/metric/deep_feature_distance.h"
#include "dplm/model/doa_model.h"
#include "dplm/model/inference.h"
#include "json.hpp"

namespace dplm {

// Absolute azimuth difference on the circle, in degrees within [0, 180].
inline double AzimuthSeparationDeg(double az1_deg, double az2_deg) {
  return std::abs(RadToDeg(WrapAngle(DegToRad(az1_deg - az2_deg))));
}

// ---------------------------------------------------------------------------
// Angular sweep.

struct SweepPoint {
  double azimuth_deg = 0.0;
  double separation_deg = 0.0;
  double distance = 0.0;
};

struct SweepResult {
  double reference_deg = 0.0;
  std::vector<SweepPoint> points;
  std::optional<double> spearman;  // distance vs separation; unset if undefined
};

using DirectionRenderer = std::function<BinauralSignal(const SourceLocation&)>;

// Renders the same content at the reference and every test azimuth (elevation
// 0) and measures the distance of each test rendering to the reference.
inline SweepResult AngularSweep(const DeepFeatureMetric& metric,
                                double reference_deg,
                                const std::vector<double>& test_azimuths_deg,
                                const DirectionRenderer& render) {
  Require(!test_azimuths_deg.empty(), "sweep needs at least one test azimuth");
  SweepResult r;
  r.reference_deg = reference_deg;
  const ActivationStack ref = metric.Activations(
      render(SourceLocation::FromDegrees(reference_deg, 0.0)));
  std::vector<double> sep, dist;
  for (double az : test_azimuths_deg) {
    const ActivationStack test =
        metric.Activations(render(SourceLocation::FromDegrees(az, 0.0)));
    SweepPoint p;
    p.azimuth_deg = az;
    p.separation_deg = AzimuthSeparationDeg(az, reference_deg);
    p.distance = metric.Compare(ref, test).distance;
    r.points.push_back(p);
    sep.push_back(p.separation_deg);
    dist.push_back(p.distance);
  }
  if (sep.size() >= 3) {
    try {
      r.spearman = Spearman(dist, sep);
    } catch (const Error&) {
      r.spearman.reset();
    }
  }
  return r;
}

inline nlohmann::json SweepToJson(const SweepResult& r) {
  nlohmann::json j;
  j["reference_deg"] = r.reference_deg;
  j["points"] = nlohmann::json::array();
  for (const auto& p : r.points) {
    j["points"].push_back({{"azimuth_deg", p.azimuth_deg},
                           {"separation_deg", p.separation_deg},
                           {"distance", p.distance}});
  }
  j["spearman"] = r.spearman ? nlohmann::json(*r.spearman) : nlohmann::json();
  return j;
}

// ---------------------------------------------------------------------------
// Framewise comparison of static and moving models on one recording.

struct TimeInterval {
  double begin_sec = 0.0;
  double end_sec = 0.0;
};

// Splits a trajectory into constant-direction intervals. Consecutive
// keyframes with the same direction form a hold; the transition between two
// holds is split at its midpoint, so the intervals tile [0, duration].
inline std::vector<TimeInterval> ConstantIntervals(const Trajectory& traj,
                                                   double tol_rad = 1e-9) {
  const auto& keys = traj.keyframes();
  struct Hold {
    double begin, end;
  };
  std::vector<Hold> holds;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const bool same =
        !holds.empty() &&
        Haversine(keys[i].location, keys[i - 1].location) <= tol_rad;
    if (same) {
      holds.back().end = keys[i].time_sec;
    } else {
      holds.push_back({keys[i].time_sec, keys[i].time_sec});
    }
  }
  std::vector<TimeInterval> out;
  for (std::size_t h = 0; h < holds.size(); ++h) {
    const double begin =
        h == 0 ? 0.0 : 0.5 * (holds[h - 1].end + holds[h].begin);
    const double end = h + 1 == holds.size()
                           ? traj.duration_sec()
                           : 0.5 * (holds[h].end + holds[h + 1].begin);
    out.push_back({begin, end});
  }
  return out;
}

struct FramewiseReport {
  std::vector<double> frame_times_sec;
  std::vector<SourceLocation> truth;
  std::vector<SourceLocation> moving;
  std::vector<SourceLocation> static_whole;
  std::vector<SourceLocation> static_interval;
  std::vector<TimeInterval> intervals;
  double rmse_moving_deg = 0.0;
  double rmse_static_whole_deg = 0.0;
  double rmse_static_interval_deg = 0.0;
};

inline FramewiseReport FramewiseComparison(const DoaModel& static_model,
                                           const DoaModel& moving_model,
                                           const BinauralSignal& x,
                                           const Trajectory& trajectory,
                                           int dft_size = 512, int hop = 256) {
  const FeatureExtractor extractor(dft_size, hop);
  const FeatureTensor feat = extractor.Extract(x);
  FramewiseReport r;
  r.intervals = ConstantIntervals(trajectory);
  for (int t = 0; t < feat.frames; ++t) {
    r.frame_times_sec.push_back(std::min(
        FrameCenterSec(t, dft_size, hop, x.sample_rate()),
        trajectory.duration_sec()));
  }
  r.truth = SampleTrajectory(trajectory, r.frame_times_sec);

  const auto moving_frames = RunModel(moving_model, feat, false).frames;
  r.moving = DecodeDoa(moving_frames, moving_model.config().grid,
                       Variant::kMoving);

  const auto static_frames = RunModel(static_model, feat, false).frames;
  const SourceLocation whole = DecodeDoa(
      static_frames, static_model.config().grid, Variant::kStatic)[0];
  r.static_whole.assign(feat.frames, whole);

  // Each interval is localized on its own audio; an interval too short to
  // hold one STFT frame falls back to the whole-signal estimate.
  r.static_interval.assign(feat.frames, whole);
  for (const auto& iv : r.intervals) {
    const auto begin = static_cast<std::size_t>(
        std::llround(iv.begin_sec * x.sample_rate()));
    const auto end = std::min(
        x.size(),
        static_cast<std::size_t>(std::llround(iv.end_sec * x.sample_rate())));
    if (end <= begin || end - begin < static_cast<std::size_t>(dft_size)) {
      continue;
    }
    const auto frames =
        RunModel(static_model, extractor.Extract(x.Slice(begin, end)), false)
            .frames;
    const SourceLocation loc = DecodeDoa(
        frames, static_model.config().grid, Variant::kStatic)[0];
    for (int t = 0; t < feat.frames; ++t) {
      const double ts = r.frame_times_sec[t];
      if (ts >= iv.begin_sec && ts < iv.end_sec) r.static_interval[t] = loc;
    }
  }
  r.rmse_moving_deg = RmseFoldedAzimuthDeg(r.moving, r.truth);
  r.rmse_static_whole_deg = RmseFoldedAzimuthDeg(r.static_whole, r.truth);
  r.rmse_static_interval_deg = RmseFoldedAzimuthDeg(r.static_interval, r.truth);
  return r;
}

inline nlohmann::json FramewiseToJson(const FramewiseReport& r) {
  auto azimuths = [](const std::vector<SourceLocation>& v) {
    std::vector<double> out;
    for (const auto& l : v) out.push_back(RadToDeg(l.azimuth()));
    return out;
  };
  nlohmann::json j;
  j["frame_times_sec"] = r.frame_times_sec;
  j["truth_azimuth_deg"] = azimuths(r.truth);
  j["moving_azimuth_deg"] = azimuths(r.moving);
  j["static_whole_azimuth_deg"] = azimuths(r.static_whole);
  j["static_interval_azimuth_deg"] = azimuths(r.static_interval);
  j["intervals"] = nlohmann::json::array();
  for (const auto& iv : r.intervals) {
    j["intervals"].push_back({iv.begin_sec, iv.end_sec});
  }
  j["rmse_deg"] = {{"moving", r.rmse_moving_deg},
                   {"static_whole", r.rmse_static_whole_deg},
                   {"static_interval", r.rmse_static_interval_deg}};
  return j;
}

// ---------------------------------------------------------------------------
// Correlation with listening-test ratings.

struct RatingRecord {
  std::string condition_id;
  std::string reference_wav;
  std::string test_wav;
  double rating = 0.0;
  std::string study_id;
};

// Reads `condition_id,reference_wav,test_wav,rating,study_id`. Relative WAV
// paths are resolved against the CSV's directory.
inline std::vector<RatingRecord> LoadRatingsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open ratings file: " + path);
  const std::filesystem::path dir =
      std::filesystem::path(path).parent_path();
  auto bad = [&](int line, const std::string& msg) {
    Fail(ErrorCode::kManifest, path + ":" + std::to_string(line) + ": " + msg);
  };
  std::vector<RatingRecord> out;
  std::string text;
  int line = 0;
  bool header = true;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(text);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (header) {
      header = false;
      const std::vector<std::string> want = {"condition_id", "reference_wav",
                                             "test_wav", "rating", "study_id"};
      if (cols != want) bad(line, "expected header " + std::string(
                                      "condition_id,reference_wav,test_wav,"
                                      "rating,study_id"));
      continue;
    }
    if (cols.size() != 5) bad(line, "expected 5 columns");
    RatingRecord r;
    r.condition_id = cols[0];
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path fp(p);
      return (fp.is_absolute() ? fp : dir / fp).string();
    };
    r.reference_wav = resolve(cols[1]);
    r.test_wav = resolve(cols[2]);
    try {
      std::size_t used = 0;
      r.rating = std::stod(cols[3], &used);
      if (used != cols[3].size()) throw std::invalid_argument(cols[3]);
    } catch (const std::exception&) {
      bad(line, "rating is not a number: " + cols[3]);
    }
    if (!std::isfinite(r.rating)) bad(line, "rating must be finite");
    r.study_id = cols[4];
    out.push_back(std::move(r));
  }
  return out;
}

struct ConditionSummary {
  std::string condition_id;
  int records = 0;
  double mean_distance = 0.0;
  double mean_rating = 0.0;
};

struct StudyCorrelation {
  std::string study_id;
  std::vector<ConditionSummary> conditions;  // sorted by condition_id
  std::optional<double> spearman;  // signed: distance vs rating
  std::string skipped_reason;      // set when spearman is absent
};

struct CorrelationReport {
  std::vector<StudyCorrelation> studies;  // sorted by study_id
  std::vector<std::string> missing_files;
};

using RecordDistance = std::function<double(const RatingRecord&)>;

// Averages distance and rating within each condition, then correlates the
// per-condition means within each study. Records whose files do not exist are
// listed and dropped when `check_files` is set. The result does not depend on
// record order.
inline CorrelationReport CorrelateRatings(std::vector<RatingRecord> records,
                                          const RecordDistance& distance,
                                          bool check_files = true) {
  CorrelationReport report;
  std::sort(records.begin(), records.end(),
            [](const RatingRecord& a, const RatingRecord& b) {
              return std::tie(a.study_id, a.condition_id, a.reference_wav,
                              a.test_wav, a.rating) <
                     std::tie(b.study_id, b.condition_id, b.reference_wav,
                              b.test_wav, b.rating);
            });
  std::map<std::string, std::map<std::string, ConditionSummary>> studies;
  for (const auto& r : records) {
    if (check_files) {
      bool ok = true;
      for (const auto* p : {&r.reference_wav, &r.test_wav}) {
        if (!std::filesystem::exists(*p)) {
          if (std::find(report.missing_files.begin(),
                        report.missing_files.end(),
                        *p) == report.missing_files.end()) {
            report.missing_files.push_back(*p);
          }
          ok = false;
        }
      }
      if (!ok) continue;
    }
    auto& c = studies[r.study_id][r.condition_id];
    c.condition_id = r.condition_id;
    c.records += 1;
    c.mean_distance += distance(r);
    c.mean_rating += r.rating;
  }
  for (auto& [study_id, conds] : studies) {
    StudyCorrelation s;
    s.study_id = study_id;
    std::vector<double> d, q;
    for (auto& [cid, c] : conds) {
      c.mean_distance /= c.records;
      c.mean_rating /= c.records;
      s.conditions.push_back(c);
      d.push_back(c.mean_distance);
      q.push_back(c.mean_rating);
    }
    if (s.conditions.size() < 3) {
      s.skipped_reason = "fewer than 3 usable conditions";
    } else {
      try {
        s.spearman = Spearman(d, q);
      } catch (const Error& e) {
        s.skipped_reason = e.what();
      }
    }
    report.studies.push_back(std::move(s));
  }
  return report;
}

inline nlohmann::json CorrelationToJson(const CorrelationReport& r) {
  nlohmann::json j;
  j["sign_convention"] =
      "spearman(mean distance, mean rating); negative means larger distance "
      "goes with lower rating";
  j["studies"] = nlohmann::json::array();
  for (const auto& s : r.studies) {
    nlohmann::json js;
    js["study_id"] = s.study_id;
    js["spearman"] = s.spearman ? nlohmann::json(*s.spearman) : nlohmann::json();
    if (!s.skipped_reason.empty()) js["skipped_reason"] = s.skipped_reason;
    js["conditions"] = nlohmann::json::array();
    for (const auto& c : s.conditions) {
      js["conditions"].push_back({{"condition_id", c.condition_id},
                                  {"records", c.records},
                                  {"mean_distance", c.mean_distance},
                                  {"mean_rating", c.mean_rating}});
    }
    j["studies"].push_back(std::move(js));
  }
  j["missing_files"] = r.missing_files;
  return j;
}

}  // namespace dplm

#endif  // DPLM_EVAL_EVALUATION_H_
