// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xdface/geometry.hpp"

namespace xdface {

enum class Role { Selfie, IdDoc };
enum class Stage { Raw, Chip, Normalized, Augmented };

std::string to_string(Role role);
std::string to_string(Stage stage);
Role parse_role(const std::string& s);
Stage parse_stage(const std::string& s);

// Augmentation tag bits.
inline constexpr int kTagNoise = 1;
inline constexpr int kTagBrightness = 2;
inline constexpr int kTagClahe = 4;
inline constexpr int kTagCount = 8;

struct ManifestRow {
  std::string image_id;
  std::string subject_id;
  Role role = Role::Selfie;
  std::string path;  // relative paths resolve against the manifest directory
  Rect box;
  Eigen::Vector2d left_eye = Eigen::Vector2d::Zero();
  Eigen::Vector2d right_eye = Eigen::Vector2d::Zero();
  int augment_tag = 0;
  Stage stage = Stage::Raw;

  FaceAnnotation annotation() const { return {image_id, box, left_eye, right_eye}; }
};

struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;  // directory the manifest was read from / will be written to

  std::filesystem::path resolve(const ManifestRow& row) const;
};

/// One JSON object per line.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Unique image ids; every subject with rows has at least one selfie and one ID
/// row at each stage. Throws ManifestIncomplete naming the subject.
void validate_manifest(const Manifest& manifest);

}  // namespace xdface
