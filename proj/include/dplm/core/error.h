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

#ifndef DPLM_CORE_ERROR_H_
#define DPLM_CORE_ERROR_H_

#include <stdexcept>
#include <string>

namespace dplm {

// Error categories. The CLI maps each one to a distinct exit code.
enum class ErrorCode {
  kInvalidArgument = 3,
  kShapeMismatch = 4,
  kManifest = 5,
  kCheckpoint = 6,
  kIo = 7,
  kNumerical = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kShapeMismatch:
      return "shape_mismatch";
    case ErrorCode::kManifest:
      return "manifest";
    case ErrorCode::kCheckpoint:
      return "checkpoint";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kNumerical:
      return "numerical";
  }
  return "unknown";
}

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace dplm

#endif  // DPLM_CORE_ERROR_H_
