// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace xdface {

/// H x W x 3 raster with 8-bit channels, interleaved, row-major.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int height, int width, std::uint8_t fill = 0)
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width * kChannels, fill) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }

  std::uint8_t& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  std::uint8_t at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Mean absolute per-channel difference in [0,255] units; images must match in size.
double mean_abs_diff(const Image& a, const Image& b);

// Binary PPM (P6, maxval 255). Lossless.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const Image& img, const std::filesystem::path& path);

}  // namespace xdface
