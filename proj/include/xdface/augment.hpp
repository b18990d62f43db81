// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "xdface/image.hpp"
#include "xdface/manifest.hpp"
#include "xdface/photometric.hpp"

namespace xdface {

/// Brightness factors are drawn uniformly from [decrease_lo, decrease_hi] or
/// [increase_lo, increase_hi], each side with probability 1/2.
struct BrightnessRange {
  double decrease_lo = 0.6;
  double decrease_hi = 0.9;
  double increase_lo = 1.1;
  double increase_hi = 1.4;
};

struct AugmentParams {
  NoiseParams noise;
  BrightnessRange brightness;
  ClaheParams clahe;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct TaggedImage {
  ManifestRow row;
  Image pixels;
};

/// Brightness factor used for the image with this id.
double brightness_factor(const std::string& image_id, const BrightnessRange& range, std::uint64_t seed);

/// Id of the variant of `source_id` with the given tag.
std::string tagged_id(const std::string& source_id, int tag);

/// The three doubling stages: eye noise on the originals, brightness on
/// originals and noisy images, CLAHE on everything so far. Returns 8 images
/// per source, ordered by source then tag.
std::vector<TaggedImage> augment_images(const std::vector<TaggedImage>& sources, const AugmentParams& params);

/// File-level cascade: reads each row's chip, writes the 8 variants as
/// `<image_id>_t<tag>.ppm` under out_dir and returns their manifest.
/// Throws ManifestIncomplete if a chip is missing.
Manifest augment_dataset(const Manifest& manifest, const std::filesystem::path& out_dir,
                         const AugmentParams& params);

}  // namespace xdface
