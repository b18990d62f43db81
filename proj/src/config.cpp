// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/config.hpp"

#include <fstream>

#include "xdface/error.hpp"
#include "xdface/rng.hpp"

namespace xdface {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& block, const char* key, T& out) {
  if (!block.is_object()) return;
  const auto it = block.find(key);
  if (it == block.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("config key '") + key + "': " + e.what());
  }
}

const json& block_of(const json& j, const char* name) {
  static const json empty = json::object();
  const auto it = j.find(name);
  if (it == j.end()) return empty;
  if (!it->is_object()) throw Error(ErrorCode::FormatError, std::string("config block '") + name + "' is not an object");
  return *it;
}

std::string ace_mode_name(AceMode mode) { return mode == AceMode::Exact ? "exact" : "sampled"; }

AceMode parse_ace_mode(const std::string& s) {
  if (s == "exact") return AceMode::Exact;
  if (s == "sampled") return AceMode::Sampled;
  throw Error(ErrorCode::InvalidArgument, "unknown ACE mode: " + s);
}

}  // namespace

std::uint64_t module_seed(std::uint64_t master, SeedStream stream) {
  return mix_key(master, static_cast<std::uint64_t>(stream));
}

void apply_master_seed(PipelineConfig& config) {
  config.ace.seed = module_seed(config.seed, SeedStream::Ace);
  config.augment.seed = module_seed(config.seed, SeedStream::Augment);
  config.augment.jobs = config.jobs;
  config.split.seed = module_seed(config.seed, SeedStream::Split);
  const std::uint64_t cls = module_seed(config.seed, SeedStream::Classifier);
  config.classifier.linear.seed = cls;
  config.classifier.pmsvm.seed = cls;
  config.classifier.forest.seed = cls;
  config.classifier.forest.jobs = config.jobs;
}

void validate(const PipelineConfig& config) {
  backend_dim(config.backend);
  if (config.jobs < 1) throw Error(ErrorCode::InvalidArgument, "jobs must be >= 1");
  if (!(config.geometry.roi_factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "roi_factor must be >= 0");
  if (config.ace.sample_count < 1) throw Error(ErrorCode::InvalidArgument, "ACE sample count must be >= 1");
  if (!(config.split.train_fraction > 0.0 && config.split.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  if (config.evaluate.timing_repetitions < 0) {
    throw Error(ErrorCode::InvalidArgument, "timing repetitions must be >= 0");
  }
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::FormatError, "config must be a JSON object");
  PipelineConfig c;
  read_opt(j, "backend", c.backend);
  read_opt(j, "seed", c.seed);
  read_opt(j, "jobs", c.jobs);

  read_opt(block_of(j, "geometry"), "roi_factor", c.geometry.roi_factor);

  const json& photo = block_of(j, "photometric");
  read_opt(photo, "ace_slope", c.ace.slope);
  read_opt(photo, "ace_samples", c.ace.sample_count);
  std::string mode = ace_mode_name(c.ace.mode);
  read_opt(photo, "ace_mode", mode);
  c.ace.mode = parse_ace_mode(mode);

  const json& aug = block_of(j, "augment");
  read_opt(aug, "noise_sigma", c.augment.noise.sigma);
  read_opt(aug, "noise_region_expand", c.augment.noise.region_expand);
  read_opt(aug, "brightness_decrease_lo", c.augment.brightness.decrease_lo);
  read_opt(aug, "brightness_decrease_hi", c.augment.brightness.decrease_hi);
  read_opt(aug, "brightness_increase_lo", c.augment.brightness.increase_lo);
  read_opt(aug, "brightness_increase_hi", c.augment.brightness.increase_hi);
  read_opt(aug, "clahe_tile_rows", c.augment.clahe.tile_rows);
  read_opt(aug, "clahe_tile_cols", c.augment.clahe.tile_cols);
  read_opt(aug, "clahe_clip_limit", c.augment.clahe.clip_limit);

  const json& emb = block_of(j, "embed");
  read_opt(emb, "extractor", c.embed.extractor);
  read_opt(emb, "store", c.embed.store);

  const json& pairs = block_of(j, "pairs");
  read_opt(pairs, "train_fraction", c.split.train_fraction);
  if (pairs.contains("train_count") && !pairs["train_count"].is_null()) {
    std::size_t n = 0;
    read_opt(pairs, "train_count", n);
    c.split.train_count = n;
  }

  const json& cls = block_of(j, "classify");
  std::string kind = to_string(c.classifier.kind);
  read_opt(cls, "classifier", kind);
  c.classifier.kind = parse_classifier(kind);
  read_opt(cls, "svm_c", c.classifier.linear.C);
  read_opt(cls, "svm_tol", c.classifier.linear.tol);
  read_opt(cls, "svm_max_epochs", c.classifier.linear.max_epochs);
  read_opt(cls, "pmsvm_p", c.classifier.pmsvm.p);
  read_opt(cls, "pmsvm_omega", c.classifier.pmsvm.omega);
  read_opt(cls, "pmsvm_knots", c.classifier.pmsvm.knots);
  read_opt(cls, "pmsvm_tol", c.classifier.pmsvm.tol);
  read_opt(cls, "pmsvm_max_epochs", c.classifier.pmsvm.max_epochs);
  read_opt(cls, "rf_trees", c.classifier.forest.n_trees);
  read_opt(cls, "rf_max_features", c.classifier.forest.max_features);
  read_opt(cls, "rf_min_samples_split", c.classifier.forest.min_samples_split);
  read_opt(cls, "voting_seeds", c.classifier.voting_seeds);

  read_opt(block_of(j, "evaluate"), "timing_repetitions", c.evaluate.timing_repetitions);

  const json& syn = block_of(j, "synth");
  read_opt(syn, "n_subjects", c.synth.n_subjects);
  read_opt(syn, "image_size", c.synth.image_size);
  read_opt(syn, "embedding_dim", c.synth.embedding_dim);
  read_opt(syn, "domain_shift", c.synth.domain_shift);
  read_opt(syn, "noise_sigma", c.synth.noise_sigma);
  read_opt(syn, "seed", c.synth.seed);

  validate(c);
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["backend"] = c.backend;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["geometry"] = {{"roi_factor", c.geometry.roi_factor}};
  j["photometric"] = {
      {"ace_slope", c.ace.slope}, {"ace_mode", ace_mode_name(c.ace.mode)}, {"ace_samples", c.ace.sample_count}};
  j["augment"] = {{"noise_sigma", c.augment.noise.sigma},
                  {"noise_region_expand", c.augment.noise.region_expand},
                  {"brightness_decrease_lo", c.augment.brightness.decrease_lo},
                  {"brightness_decrease_hi", c.augment.brightness.decrease_hi},
                  {"brightness_increase_lo", c.augment.brightness.increase_lo},
                  {"brightness_increase_hi", c.augment.brightness.increase_hi},
                  {"clahe_tile_rows", c.augment.clahe.tile_rows},
                  {"clahe_tile_cols", c.augment.clahe.tile_cols},
                  {"clahe_clip_limit", c.augment.clahe.clip_limit}};
  j["embed"] = {{"extractor", c.embed.extractor}, {"store", c.embed.store}};
  j["pairs"] = {{"train_fraction", c.split.train_fraction},
                {"train_count", c.split.train_count ? json(*c.split.train_count) : json(nullptr)}};
  j["classify"] = {{"classifier", to_string(c.classifier.kind)},
                   {"svm_c", c.classifier.linear.C},
                   {"svm_tol", c.classifier.linear.tol},
                   {"svm_max_epochs", c.classifier.linear.max_epochs},
                   {"pmsvm_p", c.classifier.pmsvm.p},
                   {"pmsvm_omega", c.classifier.pmsvm.omega},
                   {"pmsvm_knots", c.classifier.pmsvm.knots},
                   {"pmsvm_tol", c.classifier.pmsvm.tol},
                   {"pmsvm_max_epochs", c.classifier.pmsvm.max_epochs},
                   {"rf_trees", c.classifier.forest.n_trees},
                   {"rf_max_features", c.classifier.forest.max_features},
                   {"rf_min_samples_split", c.classifier.forest.min_samples_split},
                   {"voting_seeds", c.classifier.voting_seeds}};
  j["evaluate"] = {{"timing_repetitions", c.evaluate.timing_repetitions}};
  j["synth"] = {{"n_subjects", c.synth.n_subjects},     {"image_size", c.synth.image_size},
                {"embedding_dim", c.synth.embedding_dim}, {"domain_shift", c.synth.domain_shift},
                {"noise_sigma", c.synth.noise_sigma},   {"seed", c.synth.seed}};
  return j;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const PipelineConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write config " + path.string());
  out << config_to_json(config).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace xdface
