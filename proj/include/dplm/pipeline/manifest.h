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

#ifndef DPLM_PIPELINE_MANIFEST_H_
#define DPLM_PIPELINE_MANIFEST_H_

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dplm/audio/types.h"
#include "dplm/core/error.h"
#include "json.hpp"

namespace dplm {

inline constexpr char kSynthPrefix[] = "synth:";
inline constexpr char kParametricPrefix[] = "parametric:";

inline bool IsSynthetic(const std::string& ref) {
  return ref.rfind(kSynthPrefix, 0) == 0;
}

// Resolves a manifest path: absolute paths as-is, then relative to the
// manifest directory, then relative to $DPLM_DATA_DIR.
inline std::string ResolvePath(const std::string& path,
                               const std::filesystem::path& base_dir) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.is_absolute()) return p.string();
  const fs::path local = base_dir / p;
  if (fs::exists(local)) return local.string();
  if (const char* root = std::getenv("DPLM_DATA_DIR")) {
    const fs::path env = fs::path(root) / p;
    if (fs::exists(env)) return env.string();
  }
  return local.string();
}

[[noreturn]] inline void ManifestError(const std::string& file, int line,
                                       const std::string& message) {
  std::ostringstream os;
  os << file << ":" << line << ": " << message;
  Fail(ErrorCode::kManifest, os.str());
}

inline bool AzimuthDegValid(double az) {
  return std::isfinite(az) && az > -180.0 && az <= 180.0;
}

inline bool ElevationDegValid(double el) {
  return std::isfinite(el) && el >= -90.0 && el <= 90.0;
}

struct BrirRecord {
  std::string id;
  std::string path;  // resolved
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  std::string room_id;
  std::string dataset_id;
  int line = 0;
};

struct DatasetRecord {
  std::string id;
  std::string source;  // resolved wav path or "synth:<seed>"
  std::optional<std::string> brir_id;
  std::optional<Trajectory> trajectory;
  std::optional<std::string> noise;  // resolved wav path or "synth:<seed>"
  double snr_db = std::numeric_limits<double>::infinity();
  std::string split;
  int line = 0;
};

namespace internal {

template <typename F>
void ForEachJsonLine(const std::string& path, F f) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open manifest: " + path);
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      ManifestError(path, line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) ManifestError(path, line, "record is not an object");
    f(j, line);
  }
}

template <typename T>
T Field(const nlohmann::json& j, const char* key, const std::string& file,
        int line) {
  if (!j.contains(key)) {
    ManifestError(file, line, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    ManifestError(file, line, std::string("field '") + key + "' has wrong type");
  }
}

inline void CheckExists(const std::string& resolved, const std::string& file,
                        int line) {
  if (!std::filesystem::exists(resolved)) {
    ManifestError(file, line, "path does not exist: " + resolved);
  }
}

}  // namespace internal

// BRIR manifest: one {path, azimuth_deg, elevation_deg, room_id, dataset_id}
// record per line; optional "id" (defaults to the path as written).
inline std::vector<BrirRecord> LoadBrirManifest(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(path).parent_path();
  std::vector<BrirRecord> out;
  std::set<std::string> ids;
  internal::ForEachJsonLine(path, [&](const nlohmann::json& j, int line) {
    BrirRecord r;
    const auto raw_path = internal::Field<std::string>(j, "path", path, line);
    r.id = j.contains("id") ? internal::Field<std::string>(j, "id", path, line)
                            : raw_path;
    r.path = ResolvePath(raw_path, base);
    r.azimuth_deg = internal::Field<double>(j, "azimuth_deg", path, line);
    r.elevation_deg = internal::Field<double>(j, "elevation_deg", path, line);
    r.room_id = internal::Field<std::string>(j, "room_id", path, line);
    r.dataset_id = internal::Field<std::string>(j, "dataset_id", path, line);
    r.line = line;
    if (!AzimuthDegValid(r.azimuth_deg)) {
      ManifestError(path, line, "azimuth_deg outside (-180, 180]");
    }
    if (!ElevationDegValid(r.elevation_deg)) {
      ManifestError(path, line, "elevation_deg outside [-90, 90]");
    }
    if (!ids.insert(r.id).second) {
      ManifestError(path, line, "duplicate id '" + r.id + "'");
    }
    internal::CheckExists(r.path, path, line);
    out.push_back(std::move(r));
  });
  return out;
}

// Parses "parametric:<azimuth_deg>[:<elevation_deg>]".
inline std::optional<SourceLocation> ParseParametricId(const std::string& id) {
  if (id.rfind(kParametricPrefix, 0) != 0) return std::nullopt;
  const std::string rest = id.substr(sizeof(kParametricPrefix) - 1);
  const auto colon = rest.find(':');
  try {
    const double az = std::stod(rest.substr(0, colon));
    const double el =
        colon == std::string::npos ? 0.0 : std::stod(rest.substr(colon + 1));
    if (!AzimuthDegValid(az) || !ElevationDegValid(el)) return std::nullopt;
    return SourceLocation::FromDegrees(az, el);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string ParametricId(double azimuth_deg, double elevation_deg = 0.0) {
  std::ostringstream os;
  os.precision(10);
  os << kParametricPrefix << azimuth_deg;
  if (elevation_deg != 0.0) os << ":" << elevation_deg;
  return os.str();
}

// Dataset manifest: {source_wav, brir_id | trajectory, noise_wav?, snr_db,
// split} per line, plus optional "id". A trajectory is
// {"duration_sec": d, "keyframes": [[t, azimuth_deg, elevation_deg], ...]}.
// `brir_ids` lists the ids known from the BRIR manifest.
inline std::vector<DatasetRecord> LoadDatasetManifest(
    const std::string& path, const std::set<std::string>& brir_ids = {}) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(path).parent_path();
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  internal::ForEachJsonLine(path, [&](const nlohmann::json& j, int line) {
    DatasetRecord r;
    r.line = line;
    r.id = j.contains("id") ? internal::Field<std::string>(j, "id", path, line)
                            : "record" + std::to_string(line);
    if (!ids.insert(r.id).second) {
      ManifestError(path, line, "duplicate id '" + r.id + "'");
    }
    const auto source = internal::Field<std::string>(j, "source_wav", path, line);
    if (IsSynthetic(source)) {
      r.source = source;
    } else {
      r.source = ResolvePath(source, base);
      internal::CheckExists(r.source, path, line);
    }
    const bool has_brir = j.contains("brir_id") && !j["brir_id"].is_null();
    const bool has_traj = j.contains("trajectory") && !j["trajectory"].is_null();
    if (has_brir == has_traj) {
      ManifestError(path, line, "exactly one of brir_id or trajectory required");
    }
    if (has_brir) {
      r.brir_id = internal::Field<std::string>(j, "brir_id", path, line);
      if (r.brir_id->rfind(kParametricPrefix, 0) == 0) {
        if (!ParseParametricId(*r.brir_id)) {
          ManifestError(path, line,
                        "invalid parametric direction (azimuth must lie in "
                        "(-180, 180]): " + *r.brir_id);
        }
      } else if (!brir_ids.contains(*r.brir_id)) {
        ManifestError(path, line, "unknown brir_id '" + *r.brir_id + "'");
      }
    } else {
      const auto& tj = j["trajectory"];
      if (!tj.is_object() || !tj.contains("keyframes") ||
          !tj.contains("duration_sec")) {
        ManifestError(path, line,
                      "trajectory needs duration_sec and keyframes");
      }
      std::vector<Keyframe> keys;
      for (const auto& k : tj["keyframes"]) {
        if (!k.is_array() || k.size() < 2) {
          ManifestError(path, line, "keyframe must be [t, az_deg, el_deg]");
        }
        const double t = k[0].get<double>();
        const double az = k[1].get<double>();
        const double el = k.size() > 2 ? k[2].get<double>() : 0.0;
        if (!AzimuthDegValid(az)) {
          ManifestError(path, line, "keyframe azimuth outside (-180, 180]");
        }
        if (!ElevationDegValid(el)) {
          ManifestError(path, line, "keyframe elevation outside [-90, 90]");
        }
        keys.push_back({t, SourceLocation::FromDegrees(az, el)});
      }
      try {
        r.trajectory = Trajectory(std::move(keys), tj["duration_sec"].get<double>());
      } catch (const Error& e) {
        ManifestError(path, line, e.what());
      }
    }
    if (j.contains("noise_wav") && !j["noise_wav"].is_null()) {
      const auto noise = internal::Field<std::string>(j, "noise_wav", path, line);
      if (IsSynthetic(noise)) {
        r.noise = noise;
      } else {
        r.noise = ResolvePath(noise, base);
        internal::CheckExists(*r.noise, path, line);
      }
    }
    if (j.contains("snr_db") && !j["snr_db"].is_null()) {
      r.snr_db = internal::Field<double>(j, "snr_db", path, line);
    }
    r.split = j.contains("split")
                  ? internal::Field<std::string>(j, "split", path, line)
                  : "train";
    if (r.split != "train" && r.split != "test") {
      ManifestError(path, line, "split must be 'train' or 'test'");
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline nlohmann::json TrajectoryToJson(const Trajectory& traj) {
  nlohmann::json keys = nlohmann::json::array();
  for (const auto& k : traj.keyframes()) {
    keys.push_back({k.time_sec, k.location.azimuth_deg(),
                    k.location.elevation_deg()});
  }
  return {{"duration_sec", traj.duration_sec()}, {"keyframes", keys}};
}

inline nlohmann::json DatasetRecordToJson(const DatasetRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["source_wav"] = r.source;
  if (r.brir_id) j["brir_id"] = *r.brir_id;
  if (r.trajectory) j["trajectory"] = TrajectoryToJson(*r.trajectory);
  if (r.noise) j["noise_wav"] = *r.noise;
  j["snr_db"] = std::isinf(r.snr_db) ? nlohmann::json(nullptr)
                                     : nlohmann::json(r.snr_db);
  j["split"] = r.split;
  return j;
}

}  // namespace dplm

#endif  // DPLM_PIPELINE_MANIFEST_H_
