// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/photometric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xdface/error.hpp"
#include "xdface/rng.hpp"

namespace xdface {

namespace {

std::uint8_t round_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

std::array<float, 3> rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const float r = r8 / 255.0f, g = g8 / 255.0f, b = b8 / 255.0f;
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float delta = mx - mn;
  float h = 0.0f;
  if (delta > 0.0f) {
    if (mx == r) {
      h = 60.0f * std::fmod((g - b) / delta, 6.0f);
    } else if (mx == g) {
      h = 60.0f * ((b - r) / delta + 2.0f);
    } else {
      h = 60.0f * ((r - g) / delta + 4.0f);
    }
    if (h < 0.0f) h += 360.0f;
  }
  const float s = mx > 0.0f ? delta / mx : 0.0f;
  return {h, s, mx};
}

std::array<std::uint8_t, 3> hsv_to_rgb(float h, float s, float v) {
  const float c = v * s;
  const float hp = std::fmod(h, 360.0f) / 60.0f;
  const float x = c * (1.0f - std::abs(std::fmod(hp, 2.0f) - 1.0f));
  float r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const float m = v - c;
  return {round_u8((r + m) * 255.0), round_u8((g + m) * 255.0), round_u8((b + m) * 255.0)};
}

HsvImage rgb_to_hsv(const Image& img) {
  HsvImage out{img.height(), img.width(), std::vector<float>(img.pixel_count() * 3)};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const auto hsv = rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = hsv[c];
    }
  return out;
}

Image hsv_to_rgb(const HsvImage& hsv) {
  Image out(hsv.height, hsv.width);
  for (int y = 0; y < hsv.height; ++y)
    for (int x = 0; x < hsv.width; ++x) {
      const auto rgb = hsv_to_rgb(hsv.at(y, x, 0), hsv.at(y, x, 1), hsv.at(y, x, 2));
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = rgb[c];
    }
  return out;
}

// --- ACE ---------------------------------------------------------------------

std::array<Eigen::ArrayXXd, 3> ace_response(const Image& img, const AceParams& params) {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "ACE needs a nonempty image");
  if (!(params.slope > 0.0)) throw Error(ErrorCode::InvalidArgument, "ACE slope must be > 0");
  if (params.mode == AceMode::Sampled && params.sample_count < 1) {
    throw Error(ErrorCode::InvalidArgument, "ACE sample count must be >= 1");
  }
  const int H = img.height(), W = img.width();
  const long N = static_cast<long>(img.pixel_count());

  // Inverse distance only depends on |dy|, |dx|.
  Eigen::ArrayXXd inv_dist(H, W);
  for (int dy = 0; dy < H; ++dy)
    for (int dx = 0; dx < W; ++dx)
      inv_dist(dy, dx) = (dx == 0 && dy == 0) ? 0.0 : 1.0 / std::hypot(double(dx), double(dy));

  // Channel-major copy of intensities in [0,1].
  std::array<std::vector<double>, 3> intensity;
  for (int c = 0; c < 3; ++c) {
    intensity[c].resize(N);
    for (long p = 0; p < N; ++p) intensity[c][p] = img.data()[p * 3 + c] / 255.0;
  }
  const double slope = params.slope;
  auto saturate = [slope](double t) { return std::clamp(slope * t, -1.0, 1.0); };

  std::array<Eigen::ArrayXXd, 3> response;
  for (auto& r : response) r.setZero(H, W);

  if (params.mode == AceMode::Exact || N == 1) {
    for (long p = 0; p < N; ++p) {
      const int py = static_cast<int>(p / W), px = static_cast<int>(p % W);
      double acc[3] = {0, 0, 0};
      for (long j = 0; j < N; ++j) {
        if (j == p) continue;
        const int jy = static_cast<int>(j / W), jx = static_cast<int>(j % W);
        const double w = inv_dist(std::abs(py - jy), std::abs(px - jx));
        for (int c = 0; c < 3; ++c) acc[c] += saturate(intensity[c][p] - intensity[c][j]) * w;
      }
      for (int c = 0; c < 3; ++c) response[c](py, px) = acc[c];
    }
    return response;
  }

  // Sampled: K distinct other pixels per target (Floyd's algorithm), keyed on
  // (seed, pixel index) so the result does not depend on evaluation order.
  const long population = N - 1;
  const long K = std::min<long>(params.sample_count, population);
  const double scale = static_cast<double>(population) / static_cast<double>(K);
  std::vector<char> chosen(population, 0);
  std::vector<long> picks;
  picks.reserve(K);
  for (long p = 0; p < N; ++p) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(p));
    picks.clear();
    for (long j = population - K; j < population; ++j) {
      const long t = static_cast<long>(uniform_index(rng, static_cast<std::uint64_t>(j) + 1));
      const long pick = chosen[t] ? j : t;
      chosen[pick] = 1;
      picks.push_back(pick);
    }
    const int py = static_cast<int>(p / W), px = static_cast<int>(p % W);
    double acc[3] = {0, 0, 0};
    for (long idx : picks) {
      chosen[idx] = 0;
      const long j = idx >= p ? idx + 1 : idx;
      const int jy = static_cast<int>(j / W), jx = static_cast<int>(j % W);
      const double w = inv_dist(std::abs(py - jy), std::abs(px - jx));
      for (int c = 0; c < 3; ++c) acc[c] += saturate(intensity[c][p] - intensity[c][j]) * w;
    }
    for (int c = 0; c < 3; ++c) response[c](py, px) = acc[c] * scale;
  }
  return response;
}

std::array<Eigen::ArrayXXd, 3> ace_scale(const std::array<Eigen::ArrayXXd, 3>& response) {
  std::array<Eigen::ArrayXXd, 3> out;
  for (int c = 0; c < 3; ++c) {
    const double lo = response[c].minCoeff();
    const double hi = response[c].maxCoeff();
    const double range = hi - lo;
    if (range <= 1e-12 * std::max(1.0, std::abs(hi))) {
      out[c] = Eigen::ArrayXXd::Constant(response[c].rows(), response[c].cols(), 128.0);
    } else {
      out[c] = (response[c] - lo) * (255.0 / range);
    }
  }
  return out;
}

Image ace_normalize(const Image& img, const AceParams& params) {
  const auto scaled = ace_scale(ace_response(img, params));
  Image out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = round_u8(scaled[c](y, x));
  return out;
}

// --- CLAHE -------------------------------------------------------------------

namespace {

struct TileGrid {
  int rows, cols;
  std::vector<int> row_edges, col_edges;  // size rows+1 / cols+1
};

TileGrid make_grid(int H, int W, const ClaheParams& params) {
  if (params.tile_rows < 1 || params.tile_cols < 1) {
    throw Error(ErrorCode::InvalidArgument, "CLAHE tile grid must be at least 1x1");
  }
  if (!(params.clip_limit >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "CLAHE clip limit must be >= 1");
  }
  TileGrid g{std::min(params.tile_rows, H), std::min(params.tile_cols, W), {}, {}};
  for (int i = 0; i <= g.rows; ++i) g.row_edges.push_back(static_cast<int>(static_cast<long>(i) * H / g.rows));
  for (int i = 0; i <= g.cols; ++i) g.col_edges.push_back(static_cast<int>(static_cast<long>(i) * W / g.cols));
  return g;
}

// Locates the two neighbouring tile centers around coordinate v and the blend weight.
void bracket(const std::vector<int>& edges, double v, int& lo, int& hi, double& t) {
  const int n = static_cast<int>(edges.size()) - 1;
  auto center = [&](int i) { return (edges[i] + edges[i + 1]) / 2.0 - 0.5; };
  if (v <= center(0)) {
    lo = hi = 0;
    t = 0.0;
    return;
  }
  if (v >= center(n - 1)) {
    lo = hi = n - 1;
    t = 0.0;
    return;
  }
  lo = 0;
  while (center(lo + 1) <= v) ++lo;
  hi = lo + 1;
  t = (v - center(lo)) / (center(hi) - center(lo));
}

}  // namespace

Eigen::ArrayXXi value_channel(const Image& img) {
  Eigen::ArrayXXi v(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      v(y, x) = std::max({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
  return v;
}

std::vector<std::array<std::uint8_t, 256>> clahe_tile_mappings(const Eigen::ArrayXXi& value,
                                                               const ClaheParams& params) {
  const int H = static_cast<int>(value.rows()), W = static_cast<int>(value.cols());
  if (H == 0 || W == 0) throw Error(ErrorCode::InvalidArgument, "CLAHE needs a nonempty image");
  const TileGrid g = make_grid(H, W, params);

  std::vector<std::array<std::uint8_t, 256>> maps(static_cast<std::size_t>(g.rows) * g.cols);
  for (int tr = 0; tr < g.rows; ++tr) {
    for (int tc = 0; tc < g.cols; ++tc) {
      std::array<double, 256> hist{};
      const int y0 = g.row_edges[tr], y1 = g.row_edges[tr + 1];
      const int x0 = g.col_edges[tc], x1 = g.col_edges[tc + 1];
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) hist[value(y, x)] += 1.0;
      const double npix = static_cast<double>(y1 - y0) * (x1 - x0);
      auto& map = maps[static_cast<std::size_t>(tr) * g.cols + tc];

      const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0; });
      if (occupied <= 1) {
        for (int v = 0; v < 256; ++v) map[v] = static_cast<std::uint8_t>(v);
        continue;
      }

      if (std::isfinite(params.clip_limit)) {
        const double limit = params.clip_limit * npix / 256.0;
        double excess = 0.0;
        for (double& h : hist) {
          if (h > limit) {
            excess += h - limit;
            h = limit;
          }
        }
        const double share = excess / 256.0;
        for (double& h : hist) h += share;
      }

      double cdf = 0.0;
      for (int v = 0; v < 256; ++v) {
        cdf += hist[v];
        map[v] = round_u8(255.0 * cdf / npix);
      }
    }
  }
  return maps;
}

Eigen::ArrayXXi clahe_plane(const Eigen::ArrayXXi& value, const ClaheParams& params) {
  const int H = static_cast<int>(value.rows()), W = static_cast<int>(value.cols());
  const TileGrid g = make_grid(H, W, params);
  const auto maps = clahe_tile_mappings(value, params);
  auto map_at = [&](int tr, int tc) -> const std::array<std::uint8_t, 256>& {
    return maps[static_cast<std::size_t>(tr) * g.cols + tc];
  };

  Eigen::ArrayXXi out(H, W);
  for (int y = 0; y < H; ++y) {
    int r0, r1;
    double ty;
    bracket(g.row_edges, y, r0, r1, ty);
    for (int x = 0; x < W; ++x) {
      int c0, c1;
      double tx;
      bracket(g.col_edges, x, c0, c1, tx);
      const int v = value(y, x);
      const double top = map_at(r0, c0)[v] * (1.0 - tx) + map_at(r0, c1)[v] * tx;
      const double bottom = map_at(r1, c0)[v] * (1.0 - tx) + map_at(r1, c1)[v] * tx;
      out(y, x) = round_u8(top * (1.0 - ty) + bottom * ty);
    }
  }
  return out;
}

Image clahe(const Image& img, const ClaheParams& params) {
  const Eigen::ArrayXXi v = value_channel(img);
  const Eigen::ArrayXXi mapped = clahe_plane(v, params);
  Image out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      if (mapped(y, x) == v(y, x)) {
        for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, c);
        continue;
      }
      const auto hsv = rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2));
      const auto rgb = hsv_to_rgb(hsv[0], hsv[1], mapped(y, x) / 255.0f);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = rgb[c];
    }
  return out;
}

// --- Brightness and noise --------------------------------------------------------

Image scale_brightness_hsv(const Image& img, double factor) {
  if (!(factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "brightness factor must be >= 0");
  HsvImage hsv = rgb_to_hsv(img);
  for (int y = 0; y < hsv.height; ++y)
    for (int x = 0; x < hsv.width; ++x) {
      float& v = hsv.at(y, x, 2);
      v = static_cast<float>(std::clamp(v * factor, 0.0, 1.0));
    }
  return hsv_to_rgb(hsv);
}

Rect eye_noise_region(const FaceAnnotation& ann, double region_expand, int image_w, int image_h) {
  const double d = (ann.right_eye - ann.left_eye).norm();
  const double pad = region_expand * d;
  const double x0 = std::min(ann.left_eye.x(), ann.right_eye.x()) - pad;
  const double x1 = std::max(ann.left_eye.x(), ann.right_eye.x()) + pad;
  const double y0 = std::min(ann.left_eye.y(), ann.right_eye.y()) - pad;
  const double y1 = std::max(ann.left_eye.y(), ann.right_eye.y()) + pad;
  const int ix0 = static_cast<int>(std::floor(x0)), iy0 = static_cast<int>(std::floor(y0));
  const int ix1 = static_cast<int>(std::ceil(x1)), iy1 = static_cast<int>(std::ceil(y1));
  return clip_to_image(Rect{ix0, iy0, ix1 - ix0 + 1, iy1 - iy0 + 1}, image_w, image_h);
}

Image add_eye_region_noise(const Image& img, const FaceAnnotation& ann, const NoiseParams& params) {
  if (!(params.sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  if (!(params.region_expand >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise region expansion must be >= 0");
  }
  Image out = img;
  if (params.sigma == 0.0) return out;
  const Rect region = eye_noise_region(ann, params.region_expand, img.width(), img.height());
  Rng rng = make_rng(params.seed, fnv1a(ann.image_id));
  std::normal_distribution<double> noise(0.0, params.sigma);
  for (int y = region.y; y < region.y + region.h; ++y)
    for (int x = region.x; x < region.x + region.w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = round_u8(img.at(y, x, c) + noise(rng));
  return out;
}

}  // namespace xdface
