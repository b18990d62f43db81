// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xdface {

enum class ErrorCode {
  AnnotationOutOfBounds,
  DegenerateLandmarks,
  InvalidTarget,
  ManifestIncomplete,
  ZeroNorm,
  DimMismatch,
  IncompleteStore,
  ExtractorFailed,
  TooFewSubjects,
  DegenerateLabels,
  NegativeFeature,
  SeedCollision,
  EmptyEval,
  InvalidArgument,
  FormatError,
  IoError,
  Internal,
};

std::string_view to_string(ErrorCode code);

/// Exit code the command-line tool reports for an error kind.
/// 2 input/validation, 3 extractor failure, 4 internal invariant violation.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace xdface
