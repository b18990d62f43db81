// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "xdface/augment.hpp"
#include "xdface/classify.hpp"
#include "xdface/embed.hpp"
#include "xdface/pairs.hpp"
#include "xdface/photometric.hpp"
#include "xdface/synth.hpp"

namespace xdface {

struct GeometryConfig {
  double roi_factor = 0.22;
};

struct EmbedConfig {
  std::string extractor;  // shell command speaking the extractor protocol
  std::string store;      // or a prebuilt embedding store to import
};

struct EvaluateConfig {
  int timing_repetitions = 0;  // 0 skips the latency report
};

/// Every block of the toolkit plus the master seed. Module seeds are derived
/// from the master seed, so one number pins a whole run.
struct PipelineConfig {
  std::string backend = kBackendOpenFace;
  std::uint64_t seed = 0;
  int jobs = 1;
  GeometryConfig geometry;
  AceParams ace;
  AugmentParams augment;
  EmbedConfig embed;
  SplitSpec split;
  ClassifierConfig classifier;
  EvaluateConfig evaluate;
  SynthSpec synth;

  int chip_size() const { return backend_chip_size(backend); }
  int embedding_dim() const { return backend_dim(backend); }
};

/// Stream keys for the per-module seeds.
enum class SeedStream : std::uint64_t { Ace = 1, Augment = 2, Split = 3, Pairs = 4, Classifier = 5 };
std::uint64_t module_seed(std::uint64_t master, SeedStream stream);

/// Pushes the master seed and job count down into every module block.
void apply_master_seed(PipelineConfig& config);

/// Throws InvalidArgument on unknown backends, non-positive jobs, etc.
void validate(const PipelineConfig& config);

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);

/// JSON text with one object per module: geometry, photometric, augment,
/// embed, pairs, classify, evaluate, synth.
PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

}  // namespace xdface
