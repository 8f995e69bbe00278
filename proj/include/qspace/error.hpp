// Copyright 2026 The qspace Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qspace {

enum class ErrorKind {
  // parsing and schema
  SyntaxError,
  UnsupportedFeature,
  UnknownIdentifier,
  AmbiguousColumn,
  TypeMismatch,
  SchemaError,
  IoError,
  // encodings
  EmptyLog,
  OutOfVocabulary,
  MalformedVector,
  NonBinaryValue,
  DimensionTooLarge,
  DegenerateData,
  InvalidWeights,
  ShapeMismatch,
  KTooLarge,
  // kernels and learners
  DegenerateScale,
  InvalidSigma,
  SpaceMismatch,
  AsymmetricInput,
  NotPsd,
  SingularSystem,
  // generative models
  InvalidQuery,
  QueryExceedsMaxT,
  ZeroProbability,
  DegenerateModel,
  UnsatisfiableConstraint,
  // command line
  MissingMetadata,
  UsageError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::AmbiguousColumn: return "AmbiguousColumn";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::EmptyLog: return "EmptyLog";
    case ErrorKind::OutOfVocabulary: return "OutOfVocabulary";
    case ErrorKind::MalformedVector: return "MalformedVector";
    case ErrorKind::NonBinaryValue: return "NonBinaryValue";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::InvalidWeights: return "InvalidWeights";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::InvalidSigma: return "InvalidSigma";
    case ErrorKind::SpaceMismatch: return "SpaceMismatch";
    case ErrorKind::AsymmetricInput: return "AsymmetricInput";
    case ErrorKind::NotPsd: return "NotPsd";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::InvalidQuery: return "InvalidQuery";
    case ErrorKind::QueryExceedsMaxT: return "QueryExceedsMaxT";
    case ErrorKind::ZeroProbability: return "ZeroProbability";
    case ErrorKind::DegenerateModel: return "DegenerateModel";
    case ErrorKind::UnsatisfiableConstraint: return "UnsatisfiableConstraint";
    case ErrorKind::MissingMetadata: return "MissingMetadata";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The kind is
/// stable and machine-readable; the message is for humans.
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

/// Token or grammar violation; `position` is a byte offset into the input.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& message)
      : Error(ErrorKind::SyntaxError,
              message + " at offset " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace qspace
