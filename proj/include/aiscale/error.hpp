// Copyright 2026 The aiscale Authors. All Rights Reserved.
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
#include <string_view>

namespace aiscale {

enum class ErrorKind {
  ShapeMismatch,
  UnderflowedExtent,
  InvalidCell,
  InvalidModel,
  UnsupportedOp,
  ZeroAccesses,
  TargetUnreachable,
  BadRange,
  Io,
  BadMagic,
  ChecksumMismatch,
  VersionUnsupported,
  OddExtent,
  WorkerFailure,
  InsufficientSamples,
  InvalidConfig,
  EmptyInput,
  UnsupportedOpForOracle,
  NoCachedForward,
  ParseError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnderflowedExtent: return "UnderflowedExtent";
    case ErrorKind::InvalidCell: return "InvalidCell";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::UnsupportedOp: return "UnsupportedOp";
    case ErrorKind::ZeroAccesses: return "ZeroAccesses";
    case ErrorKind::TargetUnreachable: return "TargetUnreachable";
    case ErrorKind::BadRange: return "BadRange";
    case ErrorKind::Io: return "Io";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::VersionUnsupported: return "VersionUnsupported";
    case ErrorKind::OddExtent: return "OddExtent";
    case ErrorKind::WorkerFailure: return "WorkerFailure";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::UnsupportedOpForOracle: return "UnsupportedOpForOracle";
    case ErrorKind::NoCachedForward: return "NoCachedForward";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace aiscale
