// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/error.hpp"

namespace xdface {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AnnotationOutOfBounds: return "AnnotationOutOfBounds";
    case ErrorCode::DegenerateLandmarks: return "DegenerateLandmarks";
    case ErrorCode::InvalidTarget: return "InvalidTarget";
    case ErrorCode::ManifestIncomplete: return "ManifestIncomplete";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::IncompleteStore: return "IncompleteStore";
    case ErrorCode::ExtractorFailed: return "ExtractorFailed";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::NegativeFeature: return "NegativeFeature";
    case ErrorCode::SeedCollision: return "SeedCollision";
    case ErrorCode::EmptyEval: return "EmptyEval";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ExtractorFailed: return 3;
    case ErrorCode::Internal: return 4;
    default: return 2;
  }
}

}  // namespace xdface
