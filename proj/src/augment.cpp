// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/augment.hpp"

#include <algorithm>
#include <array>

#include "xdface/error.hpp"
#include "xdface/parallel.hpp"
#include "xdface/rng.hpp"

namespace xdface {

namespace {
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kBrightnessStream = 2;
}  // namespace

double brightness_factor(const std::string& image_id, const BrightnessRange& range, std::uint64_t seed) {
  Rng rng = make_rng(seed, kBrightnessStream, fnv1a(image_id));
  const bool decrease = uniform01(rng) < 0.5;
  const double u = uniform01(rng);
  return decrease ? range.decrease_lo + u * (range.decrease_hi - range.decrease_lo)
                  : range.increase_lo + u * (range.increase_hi - range.increase_lo);
}

std::string tagged_id(const std::string& source_id, int tag) {
  return source_id + "_t" + std::to_string(tag);
}

std::vector<TaggedImage> augment_images(const std::vector<TaggedImage>& sources, const AugmentParams& params) {
  std::vector<TaggedImage> out(sources.size() * kTagCount);
  parallel_for(sources.size(), params.jobs, [&](std::size_t s) {
    const TaggedImage& src = sources[s];
    std::array<Image, kTagCount> variants;
    variants[0] = src.pixels;

    NoiseParams noise = params.noise;
    noise.seed = mix_key(params.seed, kNoiseStream, params.noise.seed);
    FaceAnnotation ann = src.row.annotation();
    variants[kTagNoise] = add_eye_region_noise(src.pixels, ann, noise);

    for (int tag : {0, kTagNoise}) {
      const double f = brightness_factor(tagged_id(src.row.image_id, tag), params.brightness, params.seed);
      variants[tag | kTagBrightness] = scale_brightness_hsv(variants[tag], f);
    }
    for (int tag : {0, kTagNoise, kTagBrightness, kTagNoise | kTagBrightness}) {
      variants[tag | kTagClahe] = clahe(variants[tag], params.clahe);
    }

    for (int tag = 0; tag < kTagCount; ++tag) {
      TaggedImage& t = out[s * kTagCount + static_cast<std::size_t>(tag)];
      t.row = src.row;
      t.row.image_id = tagged_id(src.row.image_id, tag);
      t.row.augment_tag = tag;
      t.row.stage = Stage::Augmented;
      t.pixels = std::move(variants[static_cast<std::size_t>(tag)]);
    }
  });
  return out;
}

Manifest augment_dataset(const Manifest& manifest, const std::filesystem::path& out_dir,
                         const AugmentParams& params) {
  std::filesystem::create_directories(out_dir);
  Manifest result;
  result.base_dir = out_dir;
  result.rows.resize(manifest.rows.size() * kTagCount);
  parallel_for(manifest.rows.size(), params.jobs, [&](std::size_t i) {
    const ManifestRow& row = manifest.rows[i];
    if (row.stage == Stage::Raw || row.stage == Stage::Augmented) {
      throw Error(ErrorCode::ManifestIncomplete, row.image_id + ": row is not a face chip");
    }
    const auto path = manifest.resolve(row);
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::ManifestIncomplete, row.image_id + ": missing chip " + path.string());
    }
    AugmentParams single = params;
    single.jobs = 1;
    auto variants = augment_images({TaggedImage{row, read_ppm(path)}}, single);
    for (int tag = 0; tag < kTagCount; ++tag) {
      auto& v = variants[static_cast<std::size_t>(tag)];
      v.row.path = v.row.image_id + ".ppm";
      write_ppm(v.pixels, out_dir / v.row.path);
      result.rows[i * kTagCount + static_cast<std::size_t>(tag)] = std::move(v.row);
    }
  });
  return result;
}

}  // namespace xdface
