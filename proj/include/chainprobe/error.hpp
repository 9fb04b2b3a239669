// Copyright 2026 The chainprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace chainprobe {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kIo,
  kBackend,
  kUndefined,
  kNotFound,
};

// Base of every error thrown by the library. The code survives the trip
// through the C API as a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorCode::kInvalidArgument, what);
}

inline Error parse_error(const std::string& what) {
  return Error(ErrorCode::kParse, what);
}

inline Error io_error(const std::string& what) {
  return Error(ErrorCode::kIo, what);
}

}  // namespace chainprobe
