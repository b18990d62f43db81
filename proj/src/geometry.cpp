// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "xdface/error.hpp"

namespace xdface {

namespace {

constexpr double kMinEyeDistance = 4.0;

std::uint8_t round_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bilinear sample at (sx, sy); caller guarantees the point lies in [0,W-1]x[0,H-1].
double sample(const Image& img, double sx, double sy, int c) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
  const double bottom = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace

std::string to_string(TransformStep::Kind kind) {
  switch (kind) {
    case TransformStep::Kind::Align: return "align";
    case TransformStep::Kind::ExpandRoi: return "expand_roi";
    case TransformStep::Kind::Crop: return "crop";
    case TransformStep::Kind::Resize: return "resize";
  }
  return "?";
}

FaceAnnotation canonicalize(FaceAnnotation ann) {
  if (ann.left_eye.x() > ann.right_eye.x()) std::swap(ann.left_eye, ann.right_eye);
  return ann;
}

Rect expand_roi_unclamped(const Rect& box, double factor) {
  if (box.empty()) throw Error(ErrorCode::InvalidArgument, "ROI box has no area");
  if (!(factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ROI factor must be >= 0");
  const int w = static_cast<int>(std::lround(box.w * (1.0 + factor)));
  const int h = static_cast<int>(std::lround(box.h * (1.0 + factor)));
  const double cx = box.x + box.w / 2.0;
  const double cy = box.y + box.h / 2.0;
  return Rect{static_cast<int>(std::floor(cx - w / 2.0 + 0.5)),
              static_cast<int>(std::floor(cy - h / 2.0 + 0.5)), w, h};
}

Rect clip_to_image(const Rect& r, int image_w, int image_h) {
  const int x0 = std::max(r.x, 0);
  const int y0 = std::max(r.y, 0);
  const int x1 = std::min(r.x + r.w, image_w);
  const int y1 = std::min(r.y + r.h, image_h);
  return Rect{x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

Rect expand_roi(const Rect& box, int image_w, int image_h, double factor) {
  if (clip_to_image(box, image_w, image_h).empty()) {
    throw Error(ErrorCode::AnnotationOutOfBounds, "face box lies outside the image");
  }
  return clip_to_image(expand_roi_unclamped(box, factor), image_w, image_h);
}

double eye_angle(const FaceAnnotation& ann) {
  const FaceAnnotation c = canonicalize(ann);
  const Eigen::Vector2d d = c.right_eye - c.left_eye;
  return std::atan2(d.y(), d.x());
}

Eigen::Vector2d rotate_point(const Eigen::Vector2d& p, const Eigen::Vector2d& center,
                             double angle) {
  return Eigen::Rotation2Dd(-angle) * (p - center) + center;
}

std::pair<Image, long> rotate_about(const Image& img, const Eigen::Vector2d& center,
                                    double angle) {
  Image out(img.height(), img.width());
  const Eigen::Matrix2d to_source = Eigen::Rotation2Dd(angle).toRotationMatrix();
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  long filled = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Eigen::Vector2d src = to_source * (Eigen::Vector2d(x, y) - center) + center;
      // Snap tiny excursions so that an identity rotation keeps border pixels.
      double sx = src.x(), sy = src.y();
      if (std::abs(sx - std::round(sx)) < 1e-9) sx = std::round(sx);
      if (std::abs(sy - std::round(sy)) < 1e-9) sy = std::round(sy);
      if (sx < 0.0 || sy < 0.0 || sx > max_x || sy > max_y) {
        ++filled;
        continue;
      }
      for (int c = 0; c < Image::kChannels; ++c) out.at(y, x, c) = round_u8(sample(img, sx, sy, c));
    }
  }
  return {std::move(out), filled};
}

AlignResult align_by_eyes(const Image& img, const FaceAnnotation& ann) {
  const FaceAnnotation canon = canonicalize(ann);
  if ((canon.right_eye - canon.left_eye).norm() < kMinEyeDistance) {
    throw Error(ErrorCode::DegenerateLandmarks,
                ann.image_id + ": eyes coincide or are closer than 4 px");
  }
  const double angle = eye_angle(canon);
  const Eigen::Vector2d center = (canon.left_eye + canon.right_eye) / 2.0;

  auto [rotated, filled] = rotate_about(img, center, angle);

  FaceAnnotation out = canon;
  out.left_eye = rotate_point(canon.left_eye, center, angle);
  out.right_eye = rotate_point(canon.right_eye, center, angle);
  const Eigen::Vector2d box_center(canon.box.x + canon.box.w / 2.0,
                                   canon.box.y + canon.box.h / 2.0);
  const Eigen::Vector2d moved = rotate_point(box_center, center, angle);
  out.box.x = static_cast<int>(std::floor(moved.x() - canon.box.w / 2.0 + 0.5));
  out.box.y = static_cast<int>(std::floor(moved.y() - canon.box.h / 2.0 + 0.5));

  TransformStep step;
  step.kind = TransformStep::Kind::Align;
  step.angle = angle;
  step.center = center;
  step.fill_pixels = filled;
  return {std::move(rotated), std::move(out), step};
}

Image crop(const Image& img, const Rect& r) {
  const Rect c = clip_to_image(r, img.width(), img.height());
  if (c != r || r.empty()) throw Error(ErrorCode::AnnotationOutOfBounds, "crop outside image");
  Image out(r.h, r.w);
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      for (int ch = 0; ch < Image::kChannels; ++ch) out.at(y, x, ch) = img.at(r.y + y, r.x + x, ch);
  return out;
}

Image resize_bilinear(const Image& img, int target_w, int target_h) {
  if (target_w <= 0 || target_h <= 0) {
    throw Error(ErrorCode::InvalidTarget, "resize target must be positive");
  }
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot resize an empty image");
  if (target_w == img.width() && target_h == img.height()) return img;

  const double sx = static_cast<double>(img.width()) / target_w;
  const double sy = static_cast<double>(img.height()) / target_h;
  Image out(target_h, target_w);
  for (int y = 0; y < target_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    for (int x = 0; x < target_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      for (int c = 0; c < Image::kChannels; ++c) out.at(y, x, c) = round_u8(sample(img, fx, fy, c));
    }
  }
  return out;
}

Eigen::Vector2d map_point(const std::vector<TransformStep>& log, const Eigen::Vector2d& p) {
  Eigen::Vector2d q = p;
  for (const auto& step : log) {
    switch (step.kind) {
      case TransformStep::Kind::Align:
        q = rotate_point(q, step.center, step.angle);
        break;
      case TransformStep::Kind::ExpandRoi:
        break;  // chooses the rectangle only
      case TransformStep::Kind::Crop:
        q -= Eigen::Vector2d(step.rect.x, step.rect.y);
        break;
      case TransformStep::Kind::Resize: {
        const double sx = static_cast<double>(step.src_w) / step.dst_w;
        const double sy = static_cast<double>(step.src_h) / step.dst_h;
        q = Eigen::Vector2d((q.x() + 0.5) / sx - 0.5, (q.y() + 0.5) / sy - 0.5);
        break;
      }
    }
  }
  return q;
}

FaceChip preprocess_face(const Image& img, const FaceAnnotation& ann, int size,
                         double roi_factor) {
  if (size <= 0) throw Error(ErrorCode::InvalidTarget, "chip size must be positive");
  if (clip_to_image(ann.box, img.width(), img.height()).empty()) {
    throw Error(ErrorCode::AnnotationOutOfBounds, ann.image_id + ": face box outside image");
  }

  FaceChip chip;
  chip.source = ann.image_id;

  AlignResult aligned = align_by_eyes(img, ann);
  chip.transform_log.push_back(aligned.step);

  TransformStep roi;
  roi.kind = TransformStep::Kind::ExpandRoi;
  try {
    roi.rect = expand_roi(aligned.annotation.box, img.width(), img.height(), roi_factor);
  } catch (const Error& e) {
    throw Error(e.code(), ann.image_id + ": aligned face box outside image");
  }
  chip.transform_log.push_back(roi);

  TransformStep cut;
  cut.kind = TransformStep::Kind::Crop;
  cut.rect = roi.rect;
  Image cropped = crop(aligned.image, cut.rect);
  chip.transform_log.push_back(cut);

  TransformStep rs;
  rs.kind = TransformStep::Kind::Resize;
  rs.src_w = cropped.width();
  rs.src_h = cropped.height();
  rs.dst_w = size;
  rs.dst_h = size;
  chip.pixels = resize_bilinear(cropped, size, size);
  chip.transform_log.push_back(rs);

  const FaceAnnotation canon = canonicalize(ann);
  chip.annotation.image_id = ann.image_id;
  chip.annotation.box = Rect{0, 0, size, size};
  chip.annotation.left_eye = map_point(chip.transform_log, canon.left_eye);
  chip.annotation.right_eye = map_point(chip.transform_log, canon.right_eye);
  return chip;
}

}  // namespace xdface
