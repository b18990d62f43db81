// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "xdface/geometry.hpp"
#include "xdface/image.hpp"

namespace xdface {

/// Per-pixel HSV triples: H in degrees [0,360), S and V in [0,1].
struct HsvImage {
  int height = 0;
  int width = 0;
  std::vector<float> data;  // interleaved H, S, V

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

std::array<float, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<std::uint8_t, 3> hsv_to_rgb(float h, float s, float v);

HsvImage rgb_to_hsv(const Image& img);
Image hsv_to_rgb(const HsvImage& hsv);

// --- Automatic color equalization ------------------------------------------

enum class AceMode { Exact, Sampled };

struct AceParams {
  double slope = 5.0;
  AceMode mode = AceMode::Sampled;
  int sample_count = 256;
  std::uint64_t seed = 0;
};

/// Stage-1 response per channel: R(p) = sum_{j != p} s(I(p) - I(j)) / |p - j|,
/// s(t) = clamp(slope * t, -1, 1), intensities in [0,1]. Sampled mode sums
/// over sample_count distinct other pixels per target and rescales by (N-1)/K.
std::array<Eigen::ArrayXXd, 3> ace_response(const Image& img, const AceParams& params);

/// Stage-2 min-max scaling of each channel response to [0,255] (128 on a flat channel).
std::array<Eigen::ArrayXXd, 3> ace_scale(const std::array<Eigen::ArrayXXd, 3>& response);

Image ace_normalize(const Image& img, const AceParams& params);

// --- CLAHE --------------------------------------------------------------------

struct ClaheParams {
  int tile_rows = 8;
  int tile_cols = 8;
  double clip_limit = 2.0;  // multiple of the uniform bin height
};

/// Per-tile 256-entry mapping; exposed for inspection and tests.
std::vector<std::array<std::uint8_t, 256>> clahe_tile_mappings(const Eigen::ArrayXXi& value,
                                                               const ClaheParams& params);

/// CLAHE on a single 8-bit plane.
Eigen::ArrayXXi clahe_plane(const Eigen::ArrayXXi& value, const ClaheParams& params);

/// CLAHE on the HSV value channel; hue and saturation are kept.
Image clahe(const Image& img, const ClaheParams& params);

/// Value channel (max of R, G, B) as an integer plane.
Eigen::ArrayXXi value_channel(const Image& img);

// --- Brightness and noise -----------------------------------------------------

/// V' = clamp(V * factor, 0, 255) in HSV space.
Image scale_brightness_hsv(const Image& img, double factor);

struct NoiseParams {
  double sigma = 8.0;          // [0,255] units
  double region_expand = 0.4;  // fraction of inter-eye distance added on every side
  std::uint64_t seed = 0;
};

/// Pixel rectangle the eye noise touches (clipped to the image).
Rect eye_noise_region(const FaceAnnotation& ann, double region_expand, int image_w, int image_h);

/// Adds i.i.d. N(0, sigma^2) noise to every channel inside the eye region, clamped to [0,255].
Image add_eye_region_noise(const Image& img, const FaceAnnotation& ann, const NoiseParams& params);

}  // namespace xdface
