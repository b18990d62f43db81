// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "xdface/augment.hpp"
#include "xdface/classify.hpp"
#include "xdface/config.hpp"
#include "xdface/embed.hpp"
#include "xdface/error.hpp"
#include "xdface/evaluate.hpp"
#include "xdface/manifest.hpp"
#include "xdface/pairs.hpp"
#include "xdface/pipeline.hpp"
#include "xdface/synth.hpp"

namespace fs = std::filesystem;
using namespace xdface;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

PipelineConfig resolve_config(const GlobalFlags& g) {
  PipelineConfig c = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.jobs) c.jobs = *g.jobs;
  validate(c);
  apply_master_seed(c);
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

PairMatrix load_pair_matrix(const fs::path& path) { return to_matrix(read_pairs(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xdface: cross-domain selfie / ID-document face matching toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--jobs", g.jobs, "worker threads for per-image stages")->check(CLI::PositiveNumber);

  std::string manifest_path, out, model_path, pairs_path, embeddings_path, extractor, from_files, plot;

  auto* preprocess = app.add_subcommand("preprocess", "align, crop, resize and ACE-normalize raw images");
  preprocess->add_option("--manifest", manifest_path, "raw manifest")->required()->check(CLI::ExistingFile);
  preprocess->add_option("--out", out, "output directory")->required();

  auto* augment = app.add_subcommand("augment", "x8 noise / brightness / CLAHE cascade");
  augment->add_option("--manifest", manifest_path, "chip or normalized manifest")->required()->check(CLI::ExistingFile);
  augment->add_option("--out", out, "output directory")->required();

  auto* embed = app.add_subcommand("embed", "build an embedding store");
  embed->add_option("--manifest", manifest_path, "image manifest")->required()->check(CLI::ExistingFile);
  auto* from_files_opt = embed->add_option("--from-files", from_files, "import an existing store");
  auto* extractor_opt = embed->add_option("--extractor", extractor, "extractor command");
  from_files_opt->excludes(extractor_opt);
  embed->add_option("--out", out, "output store")->required();

  auto* pairs = app.add_subcommand("pairs", "subject split and pair generation");
  pairs->add_option("--manifest", manifest_path, "manifest of embedded images")->required()->check(CLI::ExistingFile);
  pairs->add_option("--embeddings", embeddings_path, "embedding store")->required()->check(CLI::ExistingFile);
  pairs->add_option("--out", out, "output directory for pairs_train.bin / pairs_test.bin")->required();

  std::string classifier;
  auto* train = app.add_subcommand("train", "train a classifier on a pair file");
  train->add_option("--pairs", pairs_path, "training pairs")->required()->check(CLI::ExistingFile);
  train->add_option("--classifier", classifier, "linear-svm | pm-svm | rf | voting-rf")
      ->check(CLI::IsMember({"linear-svm", "pm-svm", "rf", "voting-rf"}));
  train->add_option("--out", out, "output model file")->required();

  int timing_reps = -1;
  auto* eval = app.add_subcommand("eval", "accuracy, EER and optional latency on a pair file");
  eval->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--pairs", pairs_path, "test pairs")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "report file (stdout when omitted)");
  eval->add_option("--timing", timing_reps, "latency repetitions (0 disables)");

  auto* roc = app.add_subcommand("roc", "write the ROC curve");
  roc->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  roc->add_option("--pairs", pairs_path, "test pairs")->required()->check(CLI::ExistingFile);
  roc->add_option("--out", out, "CSV output")->required();
  roc->add_option("--plot", plot, "SVG output");

  std::optional<int> n_subjects, image_size, dim;
  std::optional<double> noise_sigma, shift;
  auto add_synth_flags = [&](CLI::App* cmd) {
    cmd->add_option("--subjects", n_subjects, "number of subjects");
    cmd->add_option("--noise-sigma", noise_sigma, "embedding noise sigma");
    cmd->add_option("--shift", shift, "domain shift strength");
  };
  auto* synth_images_cmd = app.add_subcommand("synth-images", "render a synthetic selfie / ID image set");
  synth_images_cmd->add_option("--out", out, "output directory")->required();
  synth_images_cmd->add_option("--size", image_size, "image side in pixels");
  add_synth_flags(synth_images_cmd);

  bool serve = false;
  auto* synth_emb_cmd = app.add_subcommand("synth-embeddings", "synthetic embedding stores or extractor child");
  auto* serve_opt = synth_emb_cmd->add_flag("--serve", serve, "speak the extractor protocol on stdin/stdout");
  synth_emb_cmd->add_option("--out", out, "output directory")->excludes(serve_opt);
  synth_emb_cmd->add_option("--dim", dim, "embedding dimension");
  add_synth_flags(synth_emb_cmd);

  std::string work;
  auto* run = app.add_subcommand("run", "full pipeline with stage skipping");
  run->add_option("--manifest", manifest_path, "raw manifest")->required()->check(CLI::ExistingFile);
  run->add_option("--work", work, "work directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    PipelineConfig config = resolve_config(g);
    auto synth_spec = [&] {
      SynthSpec s = config.synth;
      if (g.seed) s.seed = *g.seed;
      if (n_subjects) s.n_subjects = *n_subjects;
      if (image_size) s.image_size = *image_size;
      if (dim) s.embedding_dim = *dim;
      if (noise_sigma) s.noise_sigma = *noise_sigma;
      if (shift) s.domain_shift = *shift;
      validate(s);
      return s;
    };

    if (*preprocess) {
      const Manifest raw = read_manifest(manifest_path);
      validate_manifest(raw);
      const Manifest m = preprocess_dataset(raw, out, config);
      write_manifest(m, fs::path(out) / "normalized.jsonl");
      std::cout << m.rows.size() << " images normalized\n";
    } else if (*augment) {
      const Manifest m = augment_dataset(read_manifest(manifest_path), out, config.augment);
      write_manifest(m, fs::path(out) / "augmented.jsonl");
      std::cout << m.rows.size() << " images written\n";
    } else if (*embed) {
      const Manifest m = read_manifest(manifest_path);
      if (!extractor.empty()) config.embed = {extractor, ""};
      if (!from_files.empty()) config.embed = {"", from_files};
      const EmbeddingStore store = embed_dataset(m, config);
      write_embedding_store(store, out);
      std::cout << store.size() << " embeddings of dim " << store.dim() << '\n';
    } else if (*pairs) {
      const Manifest m = read_manifest(manifest_path);
      const EmbeddingStore store = import_embeddings(embeddings_path);
      const PairSets sets = make_pair_sets(pair_units(m), store, config.split,
                                           module_seed(config.seed, SeedStream::Pairs));
      fs::create_directories(out);
      write_pairs(sets.train, fs::path(out) / "pairs_train.bin");
      write_pairs(sets.test, fs::path(out) / "pairs_test.bin");
      std::cout << "train_pairs=" << sets.train.size() << " test_pairs=" << sets.test.size() << '\n';
    } else if (*train) {
      if (!classifier.empty()) config.classifier.kind = parse_classifier(classifier);
      const PairMatrix data = load_pair_matrix(pairs_path);
      save_model(xdface::train(data.features, data.labels, config.classifier), out);
      std::cout << to_string(config.classifier.kind) << " trained on " << data.features.rows() << " pairs\n";
    } else if (*eval) {
      const Model model = load_model(model_path);
      const PairMatrix data = load_pair_matrix(pairs_path);
      EvalReport report = evaluate(model, data.features, data.labels);
      const int reps = timing_reps >= 0 ? timing_reps : config.evaluate.timing_repetitions;
      if (reps > 0) report.timing = timing_report(model, data.features, reps);
      const std::string text = format_report(report, report.timing.has_value());
      if (out.empty()) {
        std::cout << text;
      } else {
        write_text(out, text);
      }
    } else if (*roc) {
      const Model model = load_model(model_path);
      const PairMatrix data = load_pair_matrix(pairs_path);
      const EvalReport report = evaluate(model, data.features, data.labels);
      write_roc_csv(report.roc, out);
      if (!plot.empty()) write_roc_svg(report.roc, report.eer, plot);
      std::cout << "eer=" << report.eer << '\n';
    } else if (*synth_images_cmd) {
      const Manifest m = synth_images(synth_spec(), out, config.jobs);
      write_manifest(m, fs::path(out) / "manifest.jsonl");
      std::cout << m.rows.size() << " images written\n";
    } else if (*synth_emb_cmd) {
      const SynthSpec spec = synth_spec();
      if (serve) return serve_extractor(spec, std::cin, std::cout, std::cerr);
      if (out.empty()) throw Error(ErrorCode::InvalidArgument, "synth-embeddings needs --out or --serve");
      const auto [selfies, ids] = synth_embeddings(spec);
      EmbeddingStore both(selfies.backend_tag(), selfies.dim());
      for (const auto* store : {&selfies, &ids})
        for (const auto& [id, v] : store->records()) both.insert(id, v);
      fs::create_directories(out);
      write_embedding_store(selfies, fs::path(out) / "selfie.xdfe");
      write_embedding_store(ids, fs::path(out) / "id.xdfe");
      write_embedding_store(both, fs::path(out) / "embeddings.xdfe");
      Manifest m = synth_manifest(spec, Stage::Normalized);
      write_manifest(m, fs::path(out) / "manifest.jsonl");
      std::cout << both.size() << " embeddings of dim " << both.dim() << '\n';
    } else if (*run) {
      const EvalReport report = run_pipeline(config, manifest_path, work, &std::cerr);
      std::cout << format_report(report);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}
