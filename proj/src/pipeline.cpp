// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <utility>

#include "xdface/augment.hpp"
#include "xdface/error.hpp"
#include "xdface/geometry.hpp"
#include "xdface/image.hpp"
#include "xdface/parallel.hpp"
#include "xdface/photometric.hpp"
#include "xdface/rng.hpp"

namespace xdface {

namespace fs = std::filesystem;

Manifest preprocess_dataset(const Manifest& raw, const fs::path& out_dir, const PipelineConfig& config) {
  fs::create_directories(out_dir);
  Manifest out;
  out.base_dir = out_dir;
  out.rows.resize(raw.rows.size());
  const int size = config.chip_size();
  parallel_for(raw.rows.size(), config.jobs, [&](std::size_t i) {
    const ManifestRow& row = raw.rows[i];
    try {
      const Image img = read_ppm(raw.resolve(row));
      const FaceChip chip = preprocess_face(img, row.annotation(), size, config.geometry.roi_factor);
      write_ppm(chip.pixels, out_dir / (row.image_id + "_chip.ppm"));
      const Image normalized = ace_normalize(chip.pixels, config.ace);
      ManifestRow next = row;
      next.path = row.image_id + "_norm.ppm";
      next.box = chip.annotation.box;
      next.left_eye = chip.annotation.left_eye;
      next.right_eye = chip.annotation.right_eye;
      next.stage = Stage::Normalized;
      write_ppm(normalized, out_dir / next.path);
      out.rows[i] = std::move(next);
    } catch (const Error& e) {
      throw Error(e.code(), row.image_id + ": " + e.message());
    }
  });
  return out;
}

std::vector<ExtractorJob> extractor_jobs(const Manifest& manifest) {
  std::vector<ExtractorJob> jobs;
  jobs.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) jobs.push_back({row.image_id, fs::absolute(manifest.resolve(row))});
  return jobs;
}

EmbeddingStore embed_dataset(const Manifest& manifest, const PipelineConfig& config) {
  const int dim = config.embedding_dim();
  if (!config.embed.extractor.empty()) {
    return extract_via_external(config.embed.extractor, extractor_jobs(manifest), config.backend, dim);
  }
  if (config.embed.store.empty()) {
    throw Error(ErrorCode::InvalidArgument, "embed block needs an extractor command or a store path");
  }
  EmbeddingStore imported = import_embeddings(config.embed.store);
  if (imported.dim() != dim) {
    throw Error(ErrorCode::DimMismatch, "store " + config.embed.store + " has dim " + std::to_string(imported.dim()) +
                                            ", backend " + config.backend + " expects " + std::to_string(dim));
  }
  std::vector<std::string> ids;
  ids.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) ids.push_back(row.image_id);
  imported.require(ids);
  return imported;
}

std::vector<PairUnit> pair_units(const Manifest& manifest) {
  std::map<std::pair<std::string, int>, PairUnit> units;
  for (const auto& row : manifest.rows) {
    PairUnit& u = units[{row.subject_id, row.augment_tag}];
    u.subject_id = row.subject_id;
    u.tag = row.augment_tag;
    std::string& slot = row.role == Role::Selfie ? u.selfie_id : u.id_doc_id;
    if (slot.empty() || row.image_id < slot) slot = row.image_id;
  }
  std::vector<PairUnit> out;
  out.reserve(units.size());
  for (auto& [key, u] : units) {
    if (u.selfie_id.empty() || u.id_doc_id.empty()) {
      throw Error(ErrorCode::ManifestIncomplete, "subject " + u.subject_id + " lacks a " +
                                                     (u.selfie_id.empty() ? "selfie" : "id") + " image at tag " +
                                                     std::to_string(u.tag));
    }
    out.push_back(std::move(u));
  }
  return out;
}

PairSets make_pair_sets(const std::vector<PairUnit>& units, const EmbeddingStore& store, const SplitSpec& split,
                        std::uint64_t pair_seed) {
  std::vector<std::string> subjects;
  subjects.reserve(units.size());
  for (const auto& u : units) subjects.push_back(u.subject_id);
  const SubjectSplit s = split_subjects(subjects, split);
  const std::set<std::string> train_subjects(s.train.begin(), s.train.end());
  std::vector<PairUnit> train_units, test_units;
  for (const auto& u : units) (train_subjects.count(u.subject_id) ? train_units : test_units).push_back(u);
  PairSets sets;
  sets.train = generate_pairs(train_units, store, mix_key(pair_seed, 0));
  sets.test = generate_pairs(test_units, store, mix_key(pair_seed, 1));
  return sets;
}

std::uint64_t hash_file(const fs::path& path, std::uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

namespace {

std::string hex_key(std::uint64_t key) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key));
  return buf;
}

template <typename... Blocks>
std::uint64_t chain(std::uint64_t prev, const Blocks&... blocks) {
  const nlohmann::json all = nlohmann::json::array({blocks...});
  return fnv1a(all.dump(), mix_key(prev, 0x57A6E));
}

class StageRunner {
 public:
  StageRunner(PipelinePaths paths, std::ostream* log) : paths_(std::move(paths)), log_(log) {}

  /// Runs `body` unless the stamp for `name` equals `key` and all outputs exist.
  void run(const std::string& name, std::uint64_t key, const std::vector<fs::path>& outputs,
           const std::function<void()>& body) {
    const std::string expected = hex_key(key);
    const fs::path stamp = paths_.stamp(name);
    const bool outputs_exist =
        std::all_of(outputs.begin(), outputs.end(), [](const fs::path& p) { return fs::exists(p); });
    if (outputs_exist && read_stamp(stamp) == expected) {
      if (log_) *log_ << name << ": up to date\n";
      return;
    }
    fs::remove(stamp);
    try {
      body();
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + name + ": " + e.message());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Internal, "stage " + name + ": " + e.what());
    }
    fs::create_directories(stamp.parent_path());
    std::ofstream(stamp) << expected << '\n';
    if (log_) *log_ << name << ": done\n";
  }

 private:
  static std::string read_stamp(const fs::path& p) {
    std::ifstream in(p);
    std::string s;
    std::getline(in, s);
    return s;
  }

  PipelinePaths paths_;
  std::ostream* log_;
};

}  // namespace

EvalReport run_pipeline(const PipelineConfig& input_config, const fs::path& manifest_path, const fs::path& work_dir,
                        std::ostream* log) {
  PipelineConfig config = input_config;
  apply_master_seed(config);
  validate(config);
  const nlohmann::json cfg = config_to_json(config);
  const PipelinePaths paths{work_dir};
  fs::create_directories(work_dir);
  StageRunner runner(paths, log);

  Manifest raw;
  std::uint64_t key = 0;
  try {
    raw = read_manifest(manifest_path);
    validate_manifest(raw);
    key = hash_file(manifest_path, fnv1a("xdface-pipeline"));
    for (const auto& row : raw.rows) key = hash_file(raw.resolve(row), key);
  } catch (const Error& e) {
    throw Error(e.code(), "stage load: " + e.message());
  }

  key = chain(key, cfg["seed"], cfg["backend"], cfg["geometry"], cfg["photometric"]);
  runner.run("preprocess", key, {paths.normalized_manifest()}, [&] {
    const Manifest normalized = preprocess_dataset(raw, paths.chips(), config);
    write_manifest(normalized, paths.normalized_manifest());
  });

  key = chain(key, cfg["seed"], cfg["augment"]);
  runner.run("augment", key, {paths.augmented_manifest()}, [&] {
    const Manifest normalized = read_manifest(paths.normalized_manifest());
    const Manifest augmented = augment_dataset(normalized, paths.augmented(), config.augment);
    write_manifest(augmented, paths.augmented_manifest());
  });

  key = chain(key, cfg["backend"], cfg["embed"]);
  if (config.embed.extractor.empty() && !config.embed.store.empty()) key = hash_file(config.embed.store, key);
  runner.run("embed", key, {paths.embeddings()}, [&] {
    const Manifest augmented = read_manifest(paths.augmented_manifest());
    write_embedding_store(embed_dataset(augmented, config), paths.embeddings());
  });

  key = chain(key, cfg["seed"], cfg["pairs"]);
  runner.run("pairs", key, {paths.train_pairs(), paths.test_pairs()}, [&] {
    const Manifest augmented = read_manifest(paths.augmented_manifest());
    const EmbeddingStore store = import_embeddings(paths.embeddings());
    const PairSets sets =
        make_pair_sets(pair_units(augmented), store, config.split, module_seed(config.seed, SeedStream::Pairs));
    write_pairs(sets.train, paths.train_pairs());
    write_pairs(sets.test, paths.test_pairs());
  });

  key = chain(key, cfg["seed"], cfg["classify"]);
  runner.run("train", key, {paths.model()}, [&] {
    const PairMatrix train = to_matrix(read_pairs(paths.train_pairs()));
    save_model(xdface::train(train.features, train.labels, config.classifier), paths.model());
  });

  EvalReport report;
  key = chain(key, cfg["evaluate"]);
  std::vector<fs::path> eval_outputs{paths.report(), paths.roc_csv(), paths.roc_svg()};
  if (config.evaluate.timing_repetitions > 0) eval_outputs.push_back(paths.timing());
  bool evaluated = false;
  runner.run("eval", key, eval_outputs, [&] {
    const Model model = load_model(paths.model());
    const PairMatrix test = to_matrix(read_pairs(paths.test_pairs()));
    report = evaluate(model, test.features, test.labels);
    std::ofstream(paths.report(), std::ios::binary) << format_report(report);
    write_roc_csv(report.roc, paths.roc_csv());
    write_roc_svg(report.roc, report.eer, paths.roc_svg());
    if (config.evaluate.timing_repetitions > 0) {
      report.timing = timing_report(model, test.features, config.evaluate.timing_repetitions);
      std::ofstream(paths.timing(), std::ios::binary) << format_timing(*report.timing);
    }
    evaluated = true;
  });
  if (!evaluated) {
    const Model model = load_model(paths.model());
    const PairMatrix test = to_matrix(read_pairs(paths.test_pairs()));
    report = evaluate(model, test.features, test.labels);
  }
  return report;
}

}  // namespace xdface
