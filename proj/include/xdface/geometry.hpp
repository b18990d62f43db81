// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "xdface/image.hpp"

namespace xdface {

/// Axis-aligned integer rectangle, (x, y) is the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool operator==(const Rect&) const = default;
  bool empty() const noexcept { return w <= 0 || h <= 0; }
  bool contains(const Rect& o) const noexcept {
    return o.x >= x && o.y >= y && o.x + o.w <= x + w && o.y + o.h <= y + h;
  }
};

struct FaceAnnotation {
  std::string image_id;
  Rect box;
  Eigen::Vector2d left_eye = Eigen::Vector2d::Zero();
  Eigen::Vector2d right_eye = Eigen::Vector2d::Zero();
};

/// Swaps the eyes if needed so that left_eye.x <= right_eye.x.
FaceAnnotation canonicalize(FaceAnnotation ann);

// One entry of a chip's transform log. Each step maps points from the
// previous frame into the next one.
struct TransformStep {
  enum class Kind { Align, ExpandRoi, Crop, Resize };
  Kind kind = Kind::Align;
  // Align: rotation angle (radians, the eye-line angle that was removed),
  // rotation center, and the number of output pixels filled with black.
  double angle = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  long fill_pixels = 0;
  // ExpandRoi / Crop: the rectangle in the aligned frame.
  Rect rect;
  // Resize: source and target sizes.
  int src_w = 0, src_h = 0, dst_w = 0, dst_h = 0;
};

std::string to_string(TransformStep::Kind kind);

struct FaceChip {
  Image pixels;
  std::string source;
  std::vector<TransformStep> transform_log;
  /// Annotation in chip coordinates (box covers the full chip).
  FaceAnnotation annotation;
};

/// Scales the box about its center by (1 + factor) without clamping.
Rect expand_roi_unclamped(const Rect& box, double factor);

/// Scales the box about its center by (1 + factor), then clips to the image.
/// Throws AnnotationOutOfBounds if the box does not intersect the image.
Rect expand_roi(const Rect& box, int image_w, int image_h, double factor = 0.22);

/// Intersection with [0,W) x [0,H); may be empty.
Rect clip_to_image(const Rect& r, int image_w, int image_h);

/// Eye-line angle in radians, atan2(dy, dx) of right_eye - left_eye after canonicalization.
double eye_angle(const FaceAnnotation& ann);

/// Rotates `img` about `center` by -angle so that a line at `angle` becomes
/// horizontal. Bilinear sampling; samples outside the source are black.
/// Returns the rotated image and the number of filled pixels.
std::pair<Image, long> rotate_about(const Image& img, const Eigen::Vector2d& center, double angle);

/// Maps a point from the source frame into the frame produced by rotate_about.
Eigen::Vector2d rotate_point(const Eigen::Vector2d& p, const Eigen::Vector2d& center, double angle);

struct AlignResult {
  Image image;
  FaceAnnotation annotation;
  TransformStep step;
};

/// Rotates about the eye midpoint so both eyes share the same y.
/// Throws DegenerateLandmarks if the eyes are closer than 4 px.
AlignResult align_by_eyes(const Image& img, const FaceAnnotation& ann);

Image crop(const Image& img, const Rect& r);

/// Bilinear resize with pixel-center alignment. Throws InvalidTarget for a zero dimension.
Image resize_bilinear(const Image& img, int target_w, int target_h);

/// align_by_eyes -> expand_roi -> crop -> resize_bilinear to size x size.
FaceChip preprocess_face(const Image& img, const FaceAnnotation& ann, int size,
                         double roi_factor = 0.22);

/// Maps a source-image point through every step of a transform log.
Eigen::Vector2d map_point(const std::vector<TransformStep>& log, const Eigen::Vector2d& p);

}  // namespace xdface
