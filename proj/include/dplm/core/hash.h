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

#ifndef DPLM_CORE_HASH_H_
#define DPLM_CORE_HASH_H_

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

namespace dplm {

// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::uint64_t Fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string HexDigest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline std::string HashString(std::string_view bytes) {
  return HexDigest(Fnv1a(bytes));
}

inline std::string HashFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return HashString(content);
}

}  // namespace dplm

#endif  // DPLM_CORE_HASH_H_
