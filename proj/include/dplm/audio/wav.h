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

#ifndef DPLM_AUDIO_WAV_H_
#define DPLM_AUDIO_WAV_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dplm/audio/types.h"
#include "dplm/core/error.h"

namespace dplm {

struct WavData {
  int sample_rate = 0;
  std::vector<std::vector<double>> channels;
  std::string comment;  // LIST/INFO ICMT text, if present
};

namespace internal {

inline std::uint32_t ReadLe(const unsigned char* p, int bytes) {
  std::uint32_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void PutLe(std::string* out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

}  // namespace internal

// Reads 16/24/32-bit integer or 32-bit float PCM RIFF files.
inline WavData ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open wav file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto bad = [&](const std::string& why) {
    Fail(ErrorCode::kIo, "malformed wav file " + path + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    bad("missing RIFF/WAVE header");
  }
  int format = 0, num_channels = 0, bits = 0, rate = 0;
  std::string comment;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = internal::ReadLe(&bytes[pos + 4], 4);
    const unsigned char* body = &bytes[pos + 8];
    const std::size_t avail = bytes.size() - pos - 8;
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      if (chunk_size < 16 || avail < 16) bad("short fmt chunk");
      format = static_cast<int>(internal::ReadLe(body, 2));
      num_channels = static_cast<int>(internal::ReadLe(body + 2, 2));
      rate = static_cast<int>(internal::ReadLe(body + 4, 4));
      bits = static_cast<int>(internal::ReadLe(body + 14, 2));
      if (format == 0xFFFE && chunk_size >= 40) {
        format = static_cast<int>(internal::ReadLe(body + 24, 2));
      }
    } else if (std::memcmp(&bytes[pos], "LIST", 4) == 0 && chunk_size >= 12 &&
               avail >= chunk_size && std::memcmp(body, "INFO", 4) == 0 &&
               std::memcmp(body + 4, "ICMT", 4) == 0) {
      const std::uint32_t n = internal::ReadLe(body + 8, 4);
      if (12 + n <= chunk_size) {
        comment.assign(reinterpret_cast<const char*>(body + 12), n);
        comment.erase(comment.find_last_not_of('\0') + 1);
      }
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      data = body;
      data_size = std::min<std::size_t>(chunk_size, avail);
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  if (num_channels <= 0 || rate <= 0 || data == nullptr) {
    bad("missing fmt or data chunk");
  }
  const bool is_float = format == 3;
  if (!(format == 1 && (bits == 16 || bits == 24 || bits == 32)) &&
      !(is_float && bits == 32)) {
    bad("unsupported sample format");
  }
  const int width = bits / 8;
  const std::size_t frames = data_size / (width * num_channels);
  WavData wav;
  wav.sample_rate = rate;
  wav.comment = std::move(comment);
  wav.channels.assign(num_channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    for (int c = 0; c < num_channels; ++c) {
      const unsigned char* p = data + (i * num_channels + c) * width;
      const std::uint32_t raw = internal::ReadLe(p, width);
      double v;
      if (is_float) {
        float f;
        std::memcpy(&f, &raw, 4);
        v = f;
      } else {
        const int shift = 32 - bits;
        const auto s = static_cast<std::int32_t>(raw << shift) >> shift;
        v = static_cast<double>(s) / static_cast<double>(1u << (bits - 1));
      }
      wav.channels[c][i] = v;
    }
  }
  return wav;
}

// Writes 32-bit float PCM. A nonempty `comment` is stored in a LIST/INFO
// ICMT chunk after the samples.
inline void WriteWav(const std::string& path,
                     const std::vector<std::vector<double>>& channels,
                     int sample_rate, const std::string& comment = "") {
  Require(!channels.empty(), "wav needs at least one channel");
  const std::size_t frames = channels[0].size();
  const auto num_channels = static_cast<std::uint32_t>(channels.size());
  std::string out;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(frames * num_channels * 4);
  std::string info;
  if (!comment.empty()) {
    std::string text = comment + '\0';
    if (text.size() & 1) text += '\0';
    info = "LIST";
    internal::PutLe(&info, static_cast<std::uint32_t>(12 + text.size()), 4);
    info += "INFOICMT";
    internal::PutLe(&info, static_cast<std::uint32_t>(text.size()), 4);
    info += text;
  }
  out += "RIFF";
  internal::PutLe(&out, static_cast<std::uint32_t>(36 + data_size + info.size()),
                  4);
  out += "WAVEfmt ";
  internal::PutLe(&out, 16, 4);
  internal::PutLe(&out, 3, 2);
  internal::PutLe(&out, num_channels, 2);
  internal::PutLe(&out, static_cast<std::uint32_t>(sample_rate), 4);
  internal::PutLe(&out, static_cast<std::uint32_t>(sample_rate) * num_channels * 4, 4);
  internal::PutLe(&out, num_channels * 4, 2);
  internal::PutLe(&out, 32, 2);
  out += "data";
  internal::PutLe(&out, data_size, 4);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& ch : channels) {
      const float f = static_cast<float>(ch[i]);
      std::uint32_t raw;
      std::memcpy(&raw, &f, 4);
      internal::PutLe(&out, raw, 4);
    }
  }
  out += info;
  std::ofstream file(path, std::ios::binary);
  if (!file) Fail(ErrorCode::kIo, "cannot write wav file: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

inline void WriteWav(const std::string& path, const BinauralSignal& x,
                     const std::string& comment = "") {
  WriteWav(path, {x.left(), x.right()}, x.sample_rate(), comment);
}

// Band-limited windowed-sinc resampler.
inline std::vector<double> Resample(const std::vector<double>& x, int in_rate,
                                    int out_rate) {
  Require(in_rate > 0 && out_rate > 0, "sample rates must be positive");
  if (in_rate == out_rate) return x;
  constexpr int kHalfWidth = 16;
  const double ratio = static_cast<double>(out_rate) / in_rate;
  const double cutoff = std::min(1.0, ratio);
  const double support = kHalfWidth / cutoff;
  const auto out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(x.size()) * ratio));
  std::vector<double> y(out_len, 0.0);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double center = static_cast<double>(m) / ratio;
    const long lo = static_cast<long>(std::ceil(center - support));
    const long hi = static_cast<long>(std::floor(center + support));
    double acc = 0.0;
    for (long n = std::max(0L, lo);
         n <= std::min(hi, static_cast<long>(x.size()) - 1); ++n) {
      const double d = (center - n) * cutoff;
      const double sinc = d == 0.0 ? 1.0 : std::sin(kPi * d) / (kPi * d);
      const double w = 0.5 + 0.5 * std::cos(kPi * d / kHalfWidth);
      acc += x[n] * cutoff * sinc * w;
    }
    y[m] = acc;
  }
  return y;
}

// Mono load at the canonical rate. Multichannel files are averaged.
inline MonoSignal LoadMono(const std::string& path) {
  WavData wav = ReadWav(path);
  std::vector<double> mono(wav.channels[0].size(), 0.0);
  for (const auto& ch : wav.channels) {
    for (std::size_t i = 0; i < mono.size(); ++i) {
      mono[i] += ch[i] / wav.channels.size();
    }
  }
  return {Resample(mono, wav.sample_rate, kCanonicalSampleRate),
          kCanonicalSampleRate};
}

inline BinauralSignal LoadBinaural(const std::string& path) {
  WavData wav = ReadWav(path);
  if (wav.channels.size() != 2) {
    Fail(ErrorCode::kIo, "expected a 2-channel wav file: " + path);
  }
  return BinauralSignal(
      Resample(wav.channels[0], wav.sample_rate, kCanonicalSampleRate),
      Resample(wav.channels[1], wav.sample_rate, kCanonicalSampleRate),
      kCanonicalSampleRate);
}

inline Brir LoadBrir(const std::string& path, const SourceLocation& loc,
                     const std::string& room_id) {
  const BinauralSignal ir = LoadBinaural(path);
  return {ir.left(), ir.right(), loc, room_id, ir.sample_rate()};
}

}  // namespace dplm

#endif  // DPLM_AUDIO_WAV_H_
