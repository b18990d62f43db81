#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <unistd.h>

#include "xdface/augment.hpp"
#include "xdface/error.hpp"
#include "xdface/rng.hpp"

using namespace xdface;
namespace fs = std::filesystem;

namespace {

Image textured(int size, std::uint64_t seed) {
  Image img(size, size);
  Rng rng = make_rng(seed, 9);
  for (auto& b : img.data()) b = static_cast<std::uint8_t>(40 + uniform_index(rng, 170));
  return img;
}

ManifestRow chip_row(const std::string& subject, Role role, int size) {
  ManifestRow r;
  r.subject_id = subject;
  r.role = role;
  r.image_id = subject + (role == Role::Selfie ? "_selfie" : "_id");
  r.path = r.image_id + ".ppm";
  r.box = {0, 0, size, size};
  r.left_eye = {0.35 * size, 0.4 * size};
  r.right_eye = {0.65 * size, 0.4 * size};
  r.stage = Stage::Normalized;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("xdface_augment_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Manifest write_chips(const fs::path& dir, int subjects, int size) {
  Manifest m;
  fs::create_directories(dir);
  m.base_dir = dir;
  for (int s = 0; s < subjects; ++s) {
    for (Role role : {Role::Selfie, Role::IdDoc}) {
      ManifestRow r = chip_row("s" + std::to_string(s), role, size);
      write_ppm(textured(size, fnv1a(r.image_id)), dir / r.path);
      m.rows.push_back(r);
    }
  }
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("brightness factors fall in the two bands") {
  const BrightnessRange range;
  int low = 0, high = 0;
  for (int i = 0; i < 2000; ++i) {
    const double f = brightness_factor("img" + std::to_string(i), range, 3);
    const bool in_low = f >= 0.6 && f <= 0.9;
    const bool in_high = f >= 1.1 && f <= 1.4;
    CHECK((in_low || in_high));
    low += in_low;
    high += in_high;
    CHECK(f == brightness_factor("img" + std::to_string(i), range, 3));
  }
  CHECK(low > 900);
  CHECK(high > 900);
}

TEST_CASE("each tag is the composition its bits name") {
  const int size = 40;
  TaggedImage src{chip_row("a", Role::Selfie, size), textured(size, 1)};
  AugmentParams params;
  params.seed = 17;
  const auto out = augment_images({src}, params);
  REQUIRE(out.size() == 8);

  NoiseParams noise = params.noise;
  noise.seed = mix_key(params.seed, 1, params.noise.seed);
  const Image n = add_eye_region_noise(src.pixels, src.row.annotation(), noise);
  const Image b = scale_brightness_hsv(src.pixels, brightness_factor("a_selfie_t0", params.brightness, 17));
  const Image nb = scale_brightness_hsv(n, brightness_factor("a_selfie_t1", params.brightness, 17));
  const Image expect[8] = {src.pixels, n, b, nb,
                           clahe(src.pixels, params.clahe), clahe(n, params.clahe),
                           clahe(b, params.clahe), clahe(nb, params.clahe)};
  std::set<std::vector<std::uint8_t>> distinct;
  for (int tag = 0; tag < 8; ++tag) {
    CHECK(out[static_cast<std::size_t>(tag)].row.augment_tag == tag);
    CHECK(out[static_cast<std::size_t>(tag)].row.image_id == "a_selfie_t" + std::to_string(tag));
    CHECK(out[static_cast<std::size_t>(tag)].row.stage == Stage::Augmented);
    CHECK(out[static_cast<std::size_t>(tag)].pixels == expect[tag]);
    const auto px = out[static_cast<std::size_t>(tag)].pixels.data();
    distinct.insert({px.begin(), px.end()});
  }
  CHECK(distinct.size() == 8);
  CHECK(out[0].pixels == src.pixels);
}

TEST_CASE("augment_dataset: 4 rows become 32 with 8 tags each") {
  const fs::path dir = scratch("four");
  const Manifest in = write_chips(dir / "chips", 2, 32);
  const Manifest out = augment_dataset(in, dir / "aug", AugmentParams{});
  REQUIRE(out.rows.size() == 32);
  std::map<std::string, std::set<int>> tags;
  std::map<Role, int> roles;
  for (const auto& r : out.rows) {
    tags[r.subject_id + to_string(r.role)].insert(r.augment_tag);
    roles[r.role] += 1;
    CHECK(fs::exists(out.resolve(r)));
  }
  CHECK(tags.size() == 4);
  for (const auto& [key, set] : tags) CHECK(set.size() == 8);
  CHECK(roles[Role::Selfie] == roles[Role::IdDoc]);

  for (std::size_t i = 0; i < in.rows.size(); ++i) {
    const ManifestRow& original = out.rows[i * 8];
    CHECK(original.augment_tag == 0);
    CHECK(original.subject_id == in.rows[i].subject_id);
    CHECK(original.role == in.rows[i].role);
    CHECK(slurp(out.resolve(original)) == slurp(in.resolve(in.rows[i])));
  }
  fs::remove_all(dir);
}

TEST_CASE("augment_dataset is deterministic across runs and job counts") {
  const fs::path dir = scratch("det");
  const Manifest in = write_chips(dir / "chips", 3, 24);
  AugmentParams params;
  params.seed = 5;
  const Manifest a = augment_dataset(in, dir / "a", params);
  params.jobs = 3;
  const Manifest b = augment_dataset(in, dir / "b", params);
  REQUIRE(a.rows.size() == b.rows.size());
  write_manifest(a, dir / "a" / "m.jsonl");
  write_manifest(b, dir / "b" / "m.jsonl");
  CHECK(slurp(dir / "a" / "m.jsonl") == slurp(dir / "b" / "m.jsonl"));
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(slurp(a.resolve(a.rows[i])) == slurp(b.resolve(b.rows[i])));
  }
  params.seed = 6;
  const Manifest c = augment_dataset(in, dir / "c", params);
  int differing = 0;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    differing += slurp(a.resolve(a.rows[i])) != slurp(c.resolve(c.rows[i]));
  }
  CHECK(differing > 0);
  fs::remove_all(dir);
}

TEST_CASE("missing chips and raw rows are rejected") {
  const fs::path dir = scratch("missing");
  Manifest in = write_chips(dir / "chips", 2, 16);
  fs::remove(in.resolve(in.rows[2]));
  try {
    augment_dataset(in, dir / "aug", AugmentParams{});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ManifestIncomplete);
    CHECK(std::string(e.what()).find(in.rows[2].image_id) != std::string::npos);
  }
  Manifest raw = write_chips(dir / "chips2", 1, 16);
  raw.rows[0].stage = Stage::Raw;
  try {
    augment_dataset(raw, dir / "aug2", AugmentParams{});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ManifestIncomplete);
  }
  fs::remove_all(dir);
}
