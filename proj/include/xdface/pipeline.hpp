// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "xdface/config.hpp"
#include "xdface/embed.hpp"
#include "xdface/evaluate.hpp"
#include "xdface/manifest.hpp"
#include "xdface/pairs.hpp"

namespace xdface {

/// Geometry then ACE for every raw row. Writes `<image_id>_chip.ppm` and
/// `<image_id>_norm.ppm` under out_dir; returns the normalized-stage manifest.
/// Per-image failures are rethrown with the offending image id.
Manifest preprocess_dataset(const Manifest& raw, const std::filesystem::path& out_dir, const PipelineConfig& config);

/// One extractor job per row, with absolute paths.
std::vector<ExtractorJob> extractor_jobs(const Manifest& manifest);

/// Runs the configured extractor, or imports the configured store and checks
/// that it covers every row.
EmbeddingStore embed_dataset(const Manifest& manifest, const PipelineConfig& config);

/// Groups rows into (subject, tag) units. Throws ManifestIncomplete naming
/// the subject when a unit lacks its selfie or ID image.
std::vector<PairUnit> pair_units(const Manifest& manifest);

struct PairSets {
  std::vector<PairRecord> train;
  std::vector<PairRecord> test;
};

/// Splits by subject, then pairs within each side so no subject crosses sides.
PairSets make_pair_sets(const std::vector<PairUnit>& units, const EmbeddingStore& store, const SplitSpec& split,
                        std::uint64_t pair_seed);

struct PipelinePaths {
  std::filesystem::path work;
  std::filesystem::path chips() const { return work / "chips"; }
  std::filesystem::path normalized_manifest() const { return work / "normalized.jsonl"; }
  std::filesystem::path augmented() const { return work / "augmented"; }
  std::filesystem::path augmented_manifest() const { return work / "augmented.jsonl"; }
  std::filesystem::path embeddings() const { return work / "embeddings.xdfe"; }
  std::filesystem::path train_pairs() const { return work / "pairs_train.bin"; }
  std::filesystem::path test_pairs() const { return work / "pairs_test.bin"; }
  std::filesystem::path model() const { return work / "model.xdfm"; }
  std::filesystem::path report() const { return work / "report.txt"; }
  std::filesystem::path roc_csv() const { return work / "roc.csv"; }
  std::filesystem::path roc_svg() const { return work / "roc.svg"; }
  std::filesystem::path timing() const { return work / "timing.txt"; }
  std::filesystem::path stamp(const std::string& stage) const { return work / ".stamps" / stage; }
};

/// FNV-1a over a file's bytes, chained onto `h`.
std::uint64_t hash_file(const std::filesystem::path& path, std::uint64_t h);

/// preprocess -> augment -> embed -> pairs -> train -> eval. Each stage keys
/// its stamp on the previous stage's key and its own config block; a stage
/// whose stamp matches and whose outputs exist is skipped. Errors carry the
/// stage name. `log` receives one line per stage.
EvalReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& manifest_path,
                        const std::filesystem::path& work_dir, std::ostream* log = nullptr);

}  // namespace xdface
