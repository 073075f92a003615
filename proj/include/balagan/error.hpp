/**
 * Copyright 2026 The balagan-cpp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BALAGAN_ERROR_HPP
#define BALAGAN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace balagan {

enum class ErrorKind {
  kInsufficientData,
  kDecodeError,
  kEmptyRequest,
  kUnknownId,
  kConfigError,
  kDegenerateBatch,
  kNonFiniteLoss,
  kNonFiniteGradient,
  kTooFewPoints,
  kInvalidK,
  kShapeMismatch,
  kInconsistentAssignment,
  kEmptyClass,
  kTooFewSamples,
  kDuplicateK,
  kFormatError,
  kIoError,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this exception; `kind()` identifies the
// contract that was violated so callers and tests can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kDecodeError: return "DecodeError";
    case ErrorKind::kEmptyRequest: return "EmptyRequest";
    case ErrorKind::kUnknownId: return "UnknownId";
    case ErrorKind::kConfigError: return "ConfigError";
    case ErrorKind::kDegenerateBatch: return "DegenerateBatch";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kTooFewPoints: return "TooFewPoints";
    case ErrorKind::kInvalidK: return "InvalidK";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kInconsistentAssignment: return "InconsistentAssignment";
    case ErrorKind::kEmptyClass: return "EmptyClass";
    case ErrorKind::kTooFewSamples: return "TooFewSamples";
    case ErrorKind::kDuplicateK: return "DuplicateK";
    case ErrorKind::kFormatError: return "FormatError";
    case ErrorKind::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace balagan

#endif  // BALAGAN_ERROR_HPP
