// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <utility>

#include "xdface/embed.hpp"
#include "xdface/image.hpp"
#include "xdface/manifest.hpp"

namespace xdface {

struct SynthSpec {
  int n_subjects = 50;
  int image_size = 128;
  int embedding_dim = 128;
  double domain_shift = 0.2;  // ID-side distortion A = I + domain_shift * D
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

void validate(const SynthSpec& spec);

/// Subject ids are "s" followed by a zero-padded index.
std::string synth_subject_id(int index);
/// Image ids are "<subject>_selfie" and "<subject>_id".
std::string synth_image_id(const std::string& subject_id, Role role);

struct SynthFace {
  Image selfie;
  Image id_doc;
  FaceAnnotation annotation;  // shared geometry; image_id left empty
};

/// The fixed face geometry every synthetic image shares (centered box, level eyes).
FaceAnnotation synth_annotation(const SynthSpec& spec);

/// Renders one subject's identity pattern as a clean selfie and a degraded
/// ID-document capture (desaturated, blurred, flattened contrast).
SynthFace synth_face(const SynthSpec& spec, int subject_index);

/// Manifest rows for every subject and role; paths are `<image_id>.ppm`.
Manifest synth_manifest(const SynthSpec& spec, Stage stage);

/// Writes two PPM images per subject under out_dir and returns the raw manifest.
Manifest synth_images(const SynthSpec& spec, const std::filesystem::path& out_dir, int jobs = 1);

/// Embedding oracle. Latent z_s ~ N(0, I); selfie = normalize(z_s + e),
/// ID = normalize(A z_s + e'), e, e' ~ N(0, noise_sigma^2 I). `tag` keys the
/// noise draw so augmented variants get their own perturbation.
class EmbeddingOracle {
 public:
  explicit EmbeddingOracle(const SynthSpec& spec);

  Eigen::VectorXf embed(const std::string& subject_id, Role role, int tag = 0) const;
  const Eigen::MatrixXd& distortion() const { return distortion_; }

 private:
  SynthSpec spec_;
  Eigen::MatrixXd distortion_;  // D, scaled to unit spectral norm
};

/// (selfie store, ID store) for subjects s000000 ... with tag 0.
std::pair<EmbeddingStore, EmbeddingStore> synth_embeddings(const SynthSpec& spec);

struct ParsedImageId {
  std::string subject_id;
  Role role = Role::Selfie;
  int tag = 0;
};
/// Inverse of the synthetic naming scheme, tolerant of the "_t<tag>" suffix.
ParsedImageId parse_synth_image_id(const std::string& image_id);

/// Extractor-protocol child: reads "image_id<TAB>path" lines from `in` and
/// writes "image_id v1 ... vdim" lines to `out`. Returns the process exit code.
int serve_extractor(const SynthSpec& spec, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace xdface
