// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <random>
#include <sstream>

#include "xdface/error.hpp"
#include "xdface/parallel.hpp"
#include "xdface/rng.hpp"

namespace xdface {

namespace {

constexpr std::uint64_t kLatentStream = 11;
constexpr std::uint64_t kSelfieNoiseStream = 12;
constexpr std::uint64_t kIdNoiseStream = 13;
constexpr std::uint64_t kDistortionStream = 14;
constexpr std::uint64_t kPatternStream = 15;

struct Rgb {
  double r, g, b;
};

Rgb random_color(Rng& rng) { return {40 + 200 * uniform01(rng), 40 + 200 * uniform01(rng), 40 + 200 * uniform01(rng)}; }

void fill_ellipse(Eigen::ArrayXXd (&canvas)[3], double cx, double cy, double rx, double ry, const Rgb& c) {
  const int H = static_cast<int>(canvas[0].rows()), W = static_cast<int>(canvas[0].cols());
  const int y0 = std::max(0, static_cast<int>(cy - ry)), y1 = std::min(H - 1, static_cast<int>(cy + ry) + 1);
  const int x0 = std::max(0, static_cast<int>(cx - rx)), x1 = std::min(W - 1, static_cast<int>(cx + rx) + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x - cx) / rx, dy = (y - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) {
        canvas[0](y, x) = c.r;
        canvas[1](y, x) = c.g;
        canvas[2](y, x) = c.b;
      }
    }
}

void fill_rect(Eigen::ArrayXXd (&canvas)[3], int x, int y, int w, int h, const Rgb& c) {
  const int H = static_cast<int>(canvas[0].rows()), W = static_cast<int>(canvas[0].cols());
  for (int yy = std::max(0, y); yy < std::min(H, y + h); ++yy)
    for (int xx = std::max(0, x); xx < std::min(W, x + w); ++xx) {
      canvas[0](yy, xx) = c.r;
      canvas[1](yy, xx) = c.g;
      canvas[2](yy, xx) = c.b;
    }
}

Image to_image(const Eigen::ArrayXXd (&canvas)[3]) {
  Image img(static_cast<int>(canvas[0].rows()), static_cast<int>(canvas[0].cols()));
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(canvas[c](y, x)), 0L, 255L));
  return img;
}

Eigen::ArrayXXd box_blur(const Eigen::ArrayXXd& src) {
  const Eigen::Index H = src.rows(), W = src.cols();
  Eigen::ArrayXXd out(H, W);
  for (Eigen::Index y = 0; y < H; ++y)
    for (Eigen::Index x = 0; x < W; ++x) {
      double sum = 0.0;
      int n = 0;
      for (Eigen::Index dy = -1; dy <= 1; ++dy)
        for (Eigen::Index dx = -1; dx <= 1; ++dx) {
          const Eigen::Index yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= H || xx >= W) continue;
          sum += src(yy, xx);
          ++n;
        }
      out(y, x) = sum / n;
    }
  return out;
}

Eigen::VectorXd gaussian_vector(Rng& rng, int dim, double sigma) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = sigma * normal(rng);
  return v;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.n_subjects < 2) throw Error(ErrorCode::TooFewSubjects, "synthetic data needs at least 2 subjects");
  if (spec.image_size < 16) throw Error(ErrorCode::InvalidArgument, "synthetic images need size >= 16");
  if (spec.embedding_dim < 1) throw Error(ErrorCode::InvalidArgument, "embedding dim must be >= 1");
  if (!(spec.domain_shift >= 0.0) || !(spec.noise_sigma >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "domain shift and noise sigma must be >= 0");
  }
}

std::string synth_subject_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%06d", index);
  return buf;
}

std::string synth_image_id(const std::string& subject_id, Role role) {
  return subject_id + "_" + to_string(role);
}

FaceAnnotation synth_annotation(const SynthSpec& spec) {
  const int S = spec.image_size;
  FaceAnnotation ann;
  ann.box = Rect{static_cast<int>(S * 0.2), static_cast<int>(S * 0.14), static_cast<int>(S * 0.6),
                 static_cast<int>(S * 0.72)};
  ann.left_eye = {S * 0.38, S * 0.42};
  ann.right_eye = {S * 0.62, S * 0.42};
  return ann;
}

SynthFace synth_face(const SynthSpec& spec, int subject_index) {
  const int S = spec.image_size;
  Rng rng = make_rng(spec.seed, kPatternStream, static_cast<std::uint64_t>(subject_index));
  Eigen::ArrayXXd canvas[3];
  const Rgb background = random_color(rng);
  for (int c = 0; c < 3; ++c) canvas[c].setConstant(S, S, c == 0 ? background.r : c == 1 ? background.g : background.b);

  // Face oval, then the identity pattern: a handful of colored blobs and bars.
  fill_ellipse(canvas, S * 0.5, S * 0.5, S * 0.3, S * 0.36, random_color(rng));
  const int shapes = 6 + static_cast<int>(uniform_index(rng, 4));
  for (int k = 0; k < shapes; ++k) {
    const double cx = S * (0.25 + 0.5 * uniform01(rng));
    const double cy = S * (0.2 + 0.6 * uniform01(rng));
    const double rx = S * (0.04 + 0.1 * uniform01(rng));
    const double ry = S * (0.04 + 0.1 * uniform01(rng));
    if (uniform01(rng) < 0.5) {
      fill_ellipse(canvas, cx, cy, rx, ry, random_color(rng));
    } else {
      fill_rect(canvas, static_cast<int>(cx - rx), static_cast<int>(cy - ry), static_cast<int>(2 * rx),
                static_cast<int>(2 * ry), random_color(rng));
    }
  }

  SynthFace face;
  face.annotation = synth_annotation(spec);
  const Rgb eye{25, 20, 20};
  fill_ellipse(canvas, face.annotation.left_eye.x(), face.annotation.left_eye.y(), S * 0.035, S * 0.025, eye);
  fill_ellipse(canvas, face.annotation.right_eye.x(), face.annotation.right_eye.y(), S * 0.035, S * 0.025, eye);

  face.selfie = to_image(canvas);

  // ID capture: 60% desaturation, two 3x3 box blurs, contrast pulled toward 128.
  const Eigen::ArrayXXd gray = 0.299 * canvas[0] + 0.587 * canvas[1] + 0.114 * canvas[2];
  Eigen::ArrayXXd degraded[3];
  for (int c = 0; c < 3; ++c) {
    Eigen::ArrayXXd ch = 0.4 * canvas[c] + 0.6 * gray;
    ch = box_blur(box_blur(ch));
    degraded[c] = 128.0 + 0.6 * (ch - 128.0);
  }
  face.id_doc = to_image(degraded);
  return face;
}

Manifest synth_manifest(const SynthSpec& spec, Stage stage) {
  validate(spec);
  const FaceAnnotation ann = synth_annotation(spec);
  Manifest m;
  for (int s = 0; s < spec.n_subjects; ++s) {
    const std::string subject = synth_subject_id(s);
    for (Role role : {Role::Selfie, Role::IdDoc}) {
      ManifestRow row;
      row.image_id = synth_image_id(subject, role);
      row.subject_id = subject;
      row.role = role;
      row.path = row.image_id + ".ppm";
      row.box = ann.box;
      row.left_eye = ann.left_eye;
      row.right_eye = ann.right_eye;
      row.stage = stage;
      m.rows.push_back(std::move(row));
    }
  }
  return m;
}

Manifest synth_images(const SynthSpec& spec, const std::filesystem::path& out_dir, int jobs) {
  Manifest m = synth_manifest(spec, Stage::Raw);
  m.base_dir = out_dir;
  std::filesystem::create_directories(out_dir);
  parallel_for(static_cast<std::size_t>(spec.n_subjects), jobs, [&](std::size_t s) {
    const SynthFace face = synth_face(spec, static_cast<int>(s));
    write_ppm(face.selfie, out_dir / m.rows[2 * s].path);
    write_ppm(face.id_doc, out_dir / m.rows[2 * s + 1].path);
  });
  return m;
}

EmbeddingOracle::EmbeddingOracle(const SynthSpec& spec) : spec_(spec) {
  validate(spec);
  const int dim = spec.embedding_dim;
  Rng rng = make_rng(spec.seed, kDistortionStream);
  std::normal_distribution<double> normal(0.0, 1.0);
  distortion_.resize(dim, dim);
  for (Eigen::Index i = 0; i < distortion_.size(); ++i) distortion_.data()[i] = normal(rng);

  // Spectral norm by power iteration on D^T D.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(dim).normalized();
  double sigma = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd u = distortion_ * v;
    const Eigen::VectorXd next = distortion_.transpose() * u;
    sigma = std::sqrt(next.norm());
    if (next.norm() == 0.0) break;
    v = next.normalized();
  }
  if (sigma > 0.0) distortion_ /= sigma;
}

Eigen::VectorXf EmbeddingOracle::embed(const std::string& subject_id, Role role, int tag) const {
  const int dim = spec_.embedding_dim;
  const std::uint64_t subject_key = fnv1a(subject_id);
  Rng latent_rng = make_rng(spec_.seed, kLatentStream, subject_key);
  const Eigen::VectorXd z = gaussian_vector(latent_rng, dim, 1.0);
  const std::uint64_t stream = role == Role::Selfie ? kSelfieNoiseStream : kIdNoiseStream;
  Rng noise_rng = make_rng(spec_.seed, stream, mix_key(subject_key, static_cast<std::uint64_t>(tag)));
  const Eigen::VectorXd noise = gaussian_vector(noise_rng, dim, spec_.noise_sigma);
  Eigen::VectorXd v;
  if (role == Role::Selfie) {
    v = z + noise;
  } else {
    v = z + spec_.domain_shift * (distortion_ * z) + noise;
  }
  return l2_normalize(v).cast<float>();
}

std::pair<EmbeddingStore, EmbeddingStore> synth_embeddings(const SynthSpec& spec) {
  const EmbeddingOracle oracle(spec);
  const std::string backend = backend_for_dim(spec.embedding_dim);
  EmbeddingStore selfies(backend, spec.embedding_dim), ids(backend, spec.embedding_dim);
  for (int s = 0; s < spec.n_subjects; ++s) {
    const std::string subject = synth_subject_id(s);
    selfies.insert(synth_image_id(subject, Role::Selfie), oracle.embed(subject, Role::Selfie));
    ids.insert(synth_image_id(subject, Role::IdDoc), oracle.embed(subject, Role::IdDoc));
  }
  return {std::move(selfies), std::move(ids)};
}

ParsedImageId parse_synth_image_id(const std::string& image_id) {
  ParsedImageId parsed;
  const auto first = image_id.find('_');
  if (first == std::string::npos) throw Error(ErrorCode::FormatError, "not a synthetic image id: " + image_id);
  parsed.subject_id = image_id.substr(0, first);
  std::string rest = image_id.substr(first + 1);
  const auto tag_pos = rest.rfind("_t");
  if (tag_pos != std::string::npos) {
    parsed.tag = std::stoi(rest.substr(tag_pos + 2));
    rest = rest.substr(0, tag_pos);
  }
  parsed.role = parse_role(rest);
  return parsed;
}

int serve_extractor(const SynthSpec& spec, std::istream& in, std::ostream& out, std::ostream& err) {
  try {
    const EmbeddingOracle oracle(spec);
    std::string line;
    out << std::setprecision(9);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      const std::string id = line.substr(0, tab);
      if (tab != std::string::npos) {
        const std::filesystem::path path = line.substr(tab + 1);
        if (!std::filesystem::exists(path)) {
          err << "extractor: missing image " << path << " for " << id << '\n';
          return 1;
        }
      }
      const ParsedImageId parsed = parse_synth_image_id(id);
      const Eigen::VectorXf v = oracle.embed(parsed.subject_id, parsed.role, parsed.tag);
      out << id;
      for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
      out << '\n';
    }
    out.flush();
    return 0;
  } catch (const std::exception& e) {
    err << "extractor: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace xdface
