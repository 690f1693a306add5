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

#ifndef DPLM_MODEL_CHECKPOINT_H_
#define DPLM_MODEL_CHECKPOINT_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "dplm/core/error.h"
#include "dplm/core/hash.h"
#include "dplm/model/config.h"
#include "dplm/model/doa_model.h"
#include "json.hpp"

namespace dplm {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'D', 'P', 'L', 'M',
                                             'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointSchemaVersion = 1;

inline nlohmann::json ModelConfigToJson(const ModelConfig& c) {
  return {{"n_inception_blocks", c.n_inception_blocks},
          {"base_filters", c.base_filters},
          {"lstm_layers", c.lstm_layers},
          {"lstm_embedding", c.lstm_embedding},
          {"n_azimuth", c.grid.n_azimuth},
          {"n_elevation", c.grid.n_elevation},
          {"variant", VariantName(c.variant)},
          {"heads", HeadsName(c.heads)},
          {"input_bins", c.input_bins},
          {"leaky_slope", c.leaky_slope},
          {"init_seed", c.init_seed}};
}

// Missing keys keep their defaults.
inline ModelConfig ModelConfigFromJson(const nlohmann::json& j,
                                       ModelConfig c = {}) {
  try {
    c.n_inception_blocks = j.value("n_inception_blocks", c.n_inception_blocks);
    c.base_filters = j.value("base_filters", c.base_filters);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
    c.lstm_embedding = j.value("lstm_embedding", c.lstm_embedding);
    c.grid.n_azimuth = j.value("n_azimuth", c.grid.n_azimuth);
    c.grid.n_elevation = j.value("n_elevation", c.grid.n_elevation);
    c.variant = ParseVariant(j.value("variant", VariantName(c.variant)));
    c.heads = ParseHeads(j.value("heads", HeadsName(c.heads)));
    c.input_bins = j.value("input_bins", c.input_bins);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.init_seed = j.value("init_seed", c.init_seed);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument,
         std::string("invalid model config: ") + e.what());
  }
  return c;
}

struct Checkpoint {
  DoaModel model;
  nlohmann::json metadata;  // seed, epochs, manifest hash, ...
};

// Binary layout: 8-byte magic, u32 schema version, u64 header length, JSON
// header, then every tensor as raw little-endian float64 in header order.
inline std::string EncodeCheckpoint(const DoaModel& model,
                                    const nlohmann::json& metadata) {
  nlohmann::json header;
  header["schema_version"] = kCheckpointSchemaVersion;
  header["model"] = ModelConfigToJson(model.config());
  header["metadata"] = metadata;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : model.parameters().all()) {
    tensors.push_back({{"name", p.name},
                       {"shape", p.shape},
                       {"trainable", p.trainable},
                       {"count", p.value.size()}});
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = kCheckpointSchemaVersion;
  const std::uint64_t header_len = header_text.size();
  out.append(reinterpret_cast<const char*>(&version), sizeof(version));
  out.append(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out += header_text;
  for (const auto& p : model.parameters().all()) {
    out.append(reinterpret_cast<const char*>(p.value.data()),
               p.value.size() * sizeof(double));
  }
  return out;
}

inline Checkpoint DecodeCheckpoint(const std::string& bytes) {
  auto bad = [](const std::string& why) {
    Fail(ErrorCode::kCheckpoint, "invalid checkpoint: " + why);
  };
  const std::size_t prefix = sizeof(kCheckpointMagic) + 4 + 8;
  if (bytes.size() < prefix ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    bad("bad magic");
  }
  std::uint32_t version;
  std::uint64_t header_len;
  std::memcpy(&version, bytes.data() + 8, 4);
  std::memcpy(&header_len, bytes.data() + 12, 8);
  if (version != kCheckpointSchemaVersion) {
    bad("unsupported schema version " + std::to_string(version));
  }
  if (bytes.size() < prefix + header_len) bad("truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(prefix, header_len));
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("header is not JSON: ") + e.what());
  }
  Checkpoint ckpt{DoaModel(ModelConfigFromJson(header.at("model"))),
                  header.value("metadata", nlohmann::json::object())};
  auto& params = ckpt.model.parameters().all();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) bad("tensor count mismatch");
  std::size_t offset = prefix + header_len;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    if (t.at("name").get<std::string>() != params[i].name ||
        t.at("shape").get<std::vector<int>>() != params[i].shape) {
      bad("tensor layout mismatch at " + params[i].name);
    }
    const std::size_t n = params[i].value.size() * sizeof(double);
    if (bytes.size() < offset + n) bad("truncated tensor data");
    std::memcpy(params[i].value.data(), bytes.data() + offset, n);
    offset += n;
  }
  if (offset != bytes.size()) bad("trailing bytes");
  return ckpt;
}

inline void SaveCheckpoint(const std::string& path, const DoaModel& model,
                           const nlohmann::json& metadata) {
  const std::string bytes = EncodeCheckpoint(model, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write checkpoint: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kCheckpoint, "cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return DecodeCheckpoint(bytes);
}

}  // namespace dplm

#endif  // DPLM_MODEL_CHECKPOINT_H_
