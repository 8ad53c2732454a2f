// Copyright 2026 The steerq Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace steerq {

enum class ErrorKind {
  kArgument,
  kCapacity,
  kNotPsd,
  kNumeric,
  kInconsistency,
  kIndeterminate,
};

const char *error_kind_name(ErrorKind kind);

/// Single exception type for the library; `kind()` says which contract broke.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

inline const char *error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kArgument:
      return "argument error";
    case ErrorKind::kCapacity:
      return "capacity error";
    case ErrorKind::kNotPsd:
      return "not-PSD error";
    case ErrorKind::kNumeric:
      return "numeric error";
    case ErrorKind::kInconsistency:
      return "inconsistency error";
    case ErrorKind::kIndeterminate:
      return "indeterminate error";
  }
  return "error";
}

}  // namespace steerq
