// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xdface/error.hpp"

namespace xdface {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// x / ||x||_2. Throws ZeroNorm for the zero vector.
template <typename Derived>
Vector<typename Derived::Scalar> l2_normalize(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  // Accumulate in double so float inputs still land within 1e-6 of unit norm.
  const double norm = x.template cast<double>().norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::ZeroNorm, "cannot normalize a zero or non-finite vector");
  }
  return (x.template cast<double>() / norm).template cast<Scalar>();
}

/// Elementwise |a - b|.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> abs_difference(const Eigen::MatrixBase<DerivedA>& a,
                                                 const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch, "difference of vectors with dims " +
                                            std::to_string(a.size()) + " and " +
                                            std::to_string(b.size()));
  }
  return (a - b).cwiseAbs();
}

struct TripletParams {
  double alpha = 0.2;
};

/// True iff ||anchor - positive|| + alpha < ||anchor - negative||, strictly.
template <typename DA, typename DP, typename DN>
bool triplet_margin_check(const Eigen::MatrixBase<DA>& anchor, const Eigen::MatrixBase<DP>& positive,
                          const Eigen::MatrixBase<DN>& negative, const TripletParams& params = {}) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw Error(ErrorCode::DimMismatch, "triplet vectors differ in dimension");
  }
  if (!(params.alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "triplet margin must be >= 0");
  const double d_pos = (anchor - positive).template cast<double>().norm();
  const double d_neg = (anchor - negative).template cast<double>().norm();
  // Differences at rounding level count as ties, and ties fail the strict test.
  const double slack = 1e-12 * std::max({1.0, d_pos + params.alpha, d_neg});
  return d_pos + params.alpha < d_neg - slack;
}

struct EmbeddingVector {
  std::string image_id;
  Eigen::VectorXf values;
  bool normalized = false;

  Eigen::Index dim() const { return values.size(); }
};

EmbeddingVector l2_normalize(const EmbeddingVector& v);

/// Backend tags and the embedding size each one produces.
inline constexpr const char* kBackendVgg = "vgg-face-4096";
inline constexpr const char* kBackendOpenFace = "openface-128";
int backend_dim(const std::string& backend);
int backend_chip_size(const std::string& backend);
std::string backend_for_dim(int dim);

/// Write-once map image_id -> vector; all vectors share one dimension.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::string backend_tag, int dim) : backend_tag_(std::move(backend_tag)), dim_(dim) {}

  const std::string& backend_tag() const noexcept { return backend_tag_; }
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return records_.size(); }

  /// Throws DimMismatch (naming the id) on a wrong-sized vector, InvalidArgument on duplicates.
  void insert(const std::string& image_id, Eigen::VectorXf values);

  bool contains(const std::string& image_id) const { return records_.count(image_id) != 0; }
  /// Throws IncompleteStore if absent.
  const Eigen::VectorXf& at(const std::string& image_id) const;

  const std::map<std::string, Eigen::VectorXf>& records() const noexcept { return records_; }

  /// Throws IncompleteStore naming the first missing id.
  void require(const std::vector<std::string>& image_ids) const;

 private:
  std::string backend_tag_;
  int dim_ = 0;
  std::map<std::string, Eigen::VectorXf> records_;
};

// Binary little-endian layout: "XDFE", u16 version = 1, u32 dim, u32 count,
// then per record: u16 id_len, id bytes (UTF-8), dim x f32.
void write_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path);
EmbeddingStore import_embeddings(const std::filesystem::path& path);

struct ExtractorJob {
  std::string image_id;
  std::filesystem::path path;
};

/// Spawns `command` through /bin/sh, writes "image_id<TAB>absolute_path" lines
/// to its stdin, then parses "image_id v1 ... vdim" lines from its stdout.
/// Returns a complete store or throws; nothing partial escapes.
EmbeddingStore extract_via_external(const std::string& command, const std::vector<ExtractorJob>& jobs,
                                    const std::string& backend_tag, int expected_dim);

}  // namespace xdface
