// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "xdface/embed.hpp"

namespace xdface {

enum class Label : std::uint8_t { Impostor = 0, Genuine = 1 };

/// One (subject, augmentation tag) unit: a selfie image and an ID image that
/// share a subject and a tag.
struct PairUnit {
  std::string subject_id;
  int tag = 0;
  std::string selfie_id;
  std::string id_doc_id;
};

struct PairRecord {
  std::string selfie_id;
  std::string id_doc_id;
  std::string subject_a;
  std::string subject_b;
  int tag = 0;
  Label label = Label::Impostor;
  Eigen::VectorXf feature;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  /// Exact number of training subjects; overrides train_fraction when set.
  std::optional<std::size_t> train_count;
};

struct SubjectSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// floor(train_fraction * n), or train_count when set.
std::size_t train_subject_count(std::size_t n, const SplitSpec& spec);

/// Seeded, disjoint partition of the (deduplicated) subject ids. Throws TooFewSubjects for n < 2.
SubjectSplit split_subjects(const std::vector<std::string>& subject_ids, const SplitSpec& spec);

/// One genuine and one impostor pair per unit. The impostor uses the ID image
/// of a uniformly drawn unit with the same tag and a different subject.
/// Features are |normalize(selfie) - normalize(id)|.
std::vector<PairRecord> generate_pairs(const std::vector<PairUnit>& units, const EmbeddingStore& store,
                                       std::uint64_t seed);

/// Dense view for training: rows are pairs, labels are +1 (genuine) / -1 (impostor).
struct PairMatrix {
  Eigen::MatrixXf features;
  Eigen::VectorXi labels;
};
PairMatrix to_matrix(const std::vector<PairRecord>& pairs);

// Flat file: u32 dim, u64 count, then per record u8 label + dim x f32 (little-endian).
// Sidecar text index: one tab-separated line per row with subjects, image ids, and tag.
void write_pairs(const std::vector<PairRecord>& pairs, const std::filesystem::path& path);
std::vector<PairRecord> read_pairs(const std::filesystem::path& path);
std::filesystem::path pair_index_path(const std::filesystem::path& path);

}  // namespace xdface
