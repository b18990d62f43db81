#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "xdface/config.hpp"
#include "xdface/error.hpp"
#include "xdface/manifest.hpp"
#include "xdface/pipeline.hpp"
#include "xdface/synth.hpp"

using namespace xdface;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("xdface_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

template <typename F>
Error caught(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an xdface::Error");
  return Error(ErrorCode::Internal, "");
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("'") + XDFACE_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string serve_command(std::uint64_t seed) {
  return std::string("'") + XDFACE_CLI_PATH + "' synth-embeddings --serve --seed " + std::to_string(seed);
}

PipelineConfig small_config(std::uint64_t seed) {
  PipelineConfig c;
  c.seed = seed;
  c.classifier.kind = ClassifierKind::LinearSvm;
  c.embed.extractor = serve_command(seed);
  c.ace.sample_count = 16;
  return c;
}

fs::path synth_raw(const fs::path& dir, int subjects, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_subjects = subjects;
  spec.image_size = 64;
  spec.seed = seed;
  const Manifest m = synth_images(spec, dir);
  write_manifest(m, dir / "manifest.jsonl");
  return dir / "manifest.jsonl";
}

}  // namespace

TEST_CASE("config JSON round trip") {
  PipelineConfig c;
  c.backend = kBackendVgg;
  c.seed = 123456789012345ULL;
  c.jobs = 3;
  c.geometry.roi_factor = 0.3;
  c.ace.slope = 7.5;
  c.augment.brightness.increase_hi = 1.5;
  c.augment.clahe.tile_rows = 4;
  c.embed.extractor = "my-extractor --flag";
  c.split.train_count = 86404;
  c.classifier.kind = ClassifierKind::PmSvm;
  c.classifier.pmsvm.p = -2.0;
  c.classifier.voting_seeds = {9, 8, 7, 6, 5};
  c.evaluate.timing_repetitions = 3;
  c.synth.noise_sigma = 5.0;
  const nlohmann::json j = config_to_json(c);
  CHECK(config_to_json(config_from_json(j)) == j);
  for (const char* block : {"geometry", "photometric", "augment", "embed", "pairs", "classify", "evaluate", "synth"}) {
    CHECK(j.contains(block));
  }

  const fs::path dir = scratch("config");
  save_config(c, dir / "c.json");
  const PipelineConfig back = load_config(dir / "c.json");
  CHECK(config_to_json(back) == j);
  CHECK(back.chip_size() == 224);
  CHECK(back.embedding_dim() == 4096);
  CHECK(*back.split.train_count == 86404);

  std::ofstream(dir / "bad.json") << "{\"photometric\": {\"ace_mode\": \"fuzzy\"}}";
  CHECK(caught([&] { load_config(dir / "bad.json"); }).code() == ErrorCode::InvalidArgument);
  std::ofstream(dir / "typed.json") << "{\"geometry\": {\"roi_factor\": \"wide\"}}";
  CHECK(caught([&] { load_config(dir / "typed.json"); }).code() == ErrorCode::FormatError);
  std::ofstream(dir / "broken.json") << "{";
  CHECK(caught([&] { load_config(dir / "broken.json"); }).code() == ErrorCode::FormatError);
  fs::remove_all(dir);
}

TEST_CASE("master seed fans out to distinct module seeds") {
  std::set<std::uint64_t> seen;
  for (auto s : {SeedStream::Ace, SeedStream::Augment, SeedStream::Split, SeedStream::Pairs, SeedStream::Classifier}) {
    seen.insert(module_seed(42, s));
    CHECK(module_seed(42, s) == module_seed(42, s));
    CHECK(module_seed(42, s) != module_seed(43, s));
  }
  CHECK(seen.size() == 5);
  PipelineConfig a, b;
  a.seed = 1;
  b.seed = 2;
  apply_master_seed(a);
  apply_master_seed(b);
  CHECK(a.split.seed != b.split.seed);
  CHECK(a.augment.seed != b.augment.seed);
  CHECK(a.classifier.forest.seed != b.classifier.forest.seed);
}

TEST_CASE("manifest round trip and validation") {
  const fs::path dir = scratch("manifest");
  SynthSpec spec;
  spec.n_subjects = 3;
  Manifest m = synth_manifest(spec, Stage::Raw);
  m.base_dir = dir;
  m.rows[1].augment_tag = 5;
  m.rows[1].left_eye = {10.25, 20.5};
  write_manifest(m, dir / "m.jsonl");
  const Manifest back = read_manifest(dir / "m.jsonl");
  REQUIRE(back.rows.size() == m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    CHECK(back.rows[i].image_id == m.rows[i].image_id);
    CHECK(back.rows[i].subject_id == m.rows[i].subject_id);
    CHECK(back.rows[i].role == m.rows[i].role);
    CHECK(back.rows[i].box == m.rows[i].box);
    CHECK(back.rows[i].left_eye == m.rows[i].left_eye);
    CHECK(back.rows[i].augment_tag == m.rows[i].augment_tag);
    CHECK(back.resolve(back.rows[i]) == dir / m.rows[i].path);
  }

  Manifest lonely = m;
  lonely.rows.erase(lonely.rows.begin() + 3);
  const Error e = caught([&] { validate_manifest(lonely); });
  CHECK(e.code() == ErrorCode::ManifestIncomplete);
  CHECK(std::string(e.what()).find(lonely.rows[2].subject_id) != std::string::npos);

  Manifest dup = m;
  dup.rows[1].image_id = dup.rows[0].image_id;
  CHECK_THROWS_AS(validate_manifest(dup), Error);

  std::ofstream(dir / "junk.jsonl") << "{\"image_id\": 3}\n";
  CHECK(caught([&] { read_manifest(dir / "junk.jsonl"); }).code() == ErrorCode::FormatError);
  fs::remove_all(dir);
}

TEST_CASE("pair_units needs both roles per subject and tag") {
  SynthSpec spec;
  spec.n_subjects = 4;
  Manifest m = synth_manifest(spec, Stage::Augmented);
  CHECK(pair_units(m).size() == 4);
  m.rows.erase(m.rows.begin() + 5);
  const Error e = caught([&] { pair_units(m); });
  CHECK(e.code() == ErrorCode::ManifestIncomplete);
  CHECK(std::string(e.what()).find(synth_subject_id(2)) != std::string::npos);
}

TEST_CASE("make_pair_sets keeps subjects on one side across tags") {
  SynthSpec spec;
  spec.n_subjects = 20;
  const EmbeddingOracle oracle(spec);
  EmbeddingStore store(kBackendOpenFace, 128);
  std::vector<PairUnit> units;
  for (int s = 0; s < spec.n_subjects; ++s) {
    const std::string subj = synth_subject_id(s);
    for (int tag = 0; tag < 8; ++tag) {
      PairUnit u{subj, tag, subj + "_selfie_t" + std::to_string(tag), subj + "_id_t" + std::to_string(tag)};
      store.insert(u.selfie_id, oracle.embed(subj, Role::Selfie, tag));
      store.insert(u.id_doc_id, oracle.embed(subj, Role::IdDoc, tag));
      units.push_back(u);
    }
  }
  const PairSets sets = make_pair_sets(units, store, {0.8, 3, std::nullopt}, 4);
  CHECK(sets.train.size() == 2 * 16 * 8);
  CHECK(sets.test.size() == 2 * 4 * 8);
  std::set<std::string> train_subjects;
  for (const auto& p : sets.train) {
    train_subjects.insert(p.subject_a);
    train_subjects.insert(p.subject_b);
  }
  for (const auto& p : sets.test) {
    CHECK(train_subjects.count(p.subject_a) == 0);
    CHECK(train_subjects.count(p.subject_b) == 0);
  }
}

TEST_CASE("pipeline reruns skip finished stages and reproduce the report") {
  const fs::path dir = scratch("pipeline");
  const fs::path manifest = synth_raw(dir / "raw", 10, 3);
  const PipelineConfig config = small_config(3);

  std::ostringstream log1, log2, log3;
  const EvalReport first = run_pipeline(config, manifest, dir / "work", &log1);
  CHECK(log1.str().find("up to date") == std::string::npos);
  const std::string report = slurp(dir / "work" / "report.txt");
  CHECK(report.find("n_test=32\n") != std::string::npos);
  CHECK(fs::exists(dir / "work" / "roc.csv"));
  CHECK(fs::exists(dir / "work" / "roc.svg"));

  const EvalReport second = run_pipeline(config, manifest, dir / "work", &log2);
  for (const char* stage : {"preprocess", "augment", "embed", "pairs", "train", "eval"}) {
    CHECK(log2.str().find(std::string(stage) + ": up to date") != std::string::npos);
  }
  CHECK(slurp(dir / "work" / "report.txt") == report);
  CHECK(format_report(second) == format_report(first));

  PipelineConfig other = config;
  other.classifier.kind = ClassifierKind::RandomForest;
  other.classifier.forest.n_trees = 11;
  run_pipeline(other, manifest, dir / "work", &log3);
  CHECK(log3.str().find("pairs: up to date") != std::string::npos);
  CHECK(log3.str().find("train: done") != std::string::npos);
  CHECK(log3.str().find("eval: done") != std::string::npos);
  CHECK(slurp(dir / "work" / "report.txt").find("classifier=rf\n") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("pipeline errors name their stage") {
  const fs::path dir = scratch("pipeline_err");
  const fs::path manifest = synth_raw(dir / "raw", 3, 4);
  PipelineConfig config = small_config(4);
  config.embed.extractor = "cat > /dev/null; exit 7";
  const Error e = caught([&] { run_pipeline(config, manifest, dir / "work"); });
  CHECK(e.code() == ErrorCode::ExtractorFailed);
  CHECK(std::string(e.what()).find("stage embed") != std::string::npos);

  fs::remove(dir / "raw" / "s000001_selfie.ppm");
  const Error missing = caught([&] { run_pipeline(small_config(4), manifest, dir / "work2"); });
  CHECK(std::string(missing.what()).find("stage load") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("CLI stage commands chain end to end") {
  const fs::path dir = scratch("stages");
  const fs::path log = dir / "log.txt";
  const std::string d = "'" + dir.string() + "'";
  REQUIRE(cli("synth-embeddings --out " + d + "/emb --subjects 60 --seed 5", log) == 0);
  CHECK(fs::exists(dir / "emb" / "selfie.xdfe"));
  CHECK(fs::exists(dir / "emb" / "id.xdfe"));
  REQUIRE(cli("--seed 9 pairs --manifest " + d + "/emb/manifest.jsonl --embeddings " + d +
                  "/emb/embeddings.xdfe --out " + d + "/pairs",
              log) == 0);
  CHECK(slurp(log).find("train_pairs=96 test_pairs=24") != std::string::npos);
  REQUIRE(cli("train --pairs " + d + "/pairs/pairs_train.bin --classifier linear-svm --out " + d + "/m.xdfm", log) ==
          0);
  REQUIRE(cli("eval --model " + d + "/m.xdfm --pairs " + d + "/pairs/pairs_test.bin --out " + d + "/r.txt", log) ==
          0);
  CHECK(slurp(dir / "r.txt").find("accuracy=") != std::string::npos);
  CHECK(slurp(dir / "r.txt").find("timing") == std::string::npos);
  REQUIRE(cli("eval --model " + d + "/m.xdfm --pairs " + d + "/pairs/pairs_test.bin --timing 3", log) == 0);
  CHECK(slurp(log).find("timing_measurements=72") != std::string::npos);
  REQUIRE(cli("roc --model " + d + "/m.xdfm --pairs " + d + "/pairs/pairs_test.bin --out " + d + "/roc.csv --plot " +
                  d + "/roc.svg",
              log) == 0);
  CHECK(slurp(dir / "roc.csv").rfind("threshold,fmr,tmr\n", 0) == 0);
  CHECK(fs::exists(dir / "roc.svg"));
  fs::remove_all(dir);
}

TEST_CASE("CLI image commands and the extractor flag") {
  const fs::path dir = scratch("images");
  const fs::path log = dir / "log.txt";
  const std::string d = "'" + dir.string() + "'";
  REQUIRE(cli("synth-images --out " + d + "/raw --subjects 3 --size 64 --seed 2", log) == 0);
  REQUIRE(cli("preprocess --manifest " + d + "/raw/manifest.jsonl --out " + d + "/norm", log) == 0);
  CHECK(read_manifest(dir / "norm" / "normalized.jsonl").rows.size() == 6);
  REQUIRE(cli("augment --manifest " + d + "/norm/normalized.jsonl --out " + d + "/aug", log) == 0);
  CHECK(read_manifest(dir / "aug" / "augmented.jsonl").rows.size() == 48);
  const std::string extractor = "\"'" + std::string(XDFACE_CLI_PATH) + "' synth-embeddings --serve\"";
  REQUIRE(cli("embed --manifest " + d + "/aug/augmented.jsonl --extractor " + extractor + " --out " + d + "/e.xdfe",
              log) == 0);
  CHECK(import_embeddings(dir / "e.xdfe").size() == 48);
  REQUIRE(cli("embed --manifest " + d + "/aug/augmented.jsonl --from-files " + d + "/e.xdfe --out " + d + "/f.xdfe",
              log) == 0);
  CHECK(slurp(dir / "e.xdfe") == slurp(dir / "f.xdfe"));
  fs::remove_all(dir);
}

TEST_CASE("CLI exit codes") {
  const fs::path dir = scratch("codes");
  const fs::path log = dir / "log.txt";
  const std::string d = "'" + dir.string() + "'";
  CHECK(cli("", log) == 2);
  CHECK(cli("frobnicate", log) == 2);
  CHECK(cli("train --pairs /nonexistent.bin --out x", log) == 2);
  CHECK(cli("--help", log) == 0);
  CHECK(slurp(log).find("synth-embeddings") != std::string::npos);

  REQUIRE(cli("synth-images --out " + d + "/raw --subjects 2 --size 32", log) == 0);
  CHECK(cli("embed --manifest " + d + "/raw/manifest.jsonl --extractor 'exit 1' --out " + d + "/e.xdfe", log) == 3);
  CHECK(slurp(log).find("error:") != std::string::npos);
  CHECK(cli("synth-images --out " + d + "/raw2 --subjects 1", log) == 2);
  CHECK(slurp(log).find("TooFewSubjects") != std::string::npos);

  REQUIRE(cli("synth-embeddings --out " + d + "/emb --subjects 10 --dim 4096", log) == 0);
  REQUIRE(cli("synth-embeddings --out " + d + "/emb128 --subjects 10", log) == 0);
  REQUIRE(cli("pairs --manifest " + d + "/emb/manifest.jsonl --embeddings " + d + "/emb/embeddings.xdfe --out " + d +
                  "/p4096",
              log) == 0);
  REQUIRE(cli("pairs --manifest " + d + "/emb128/manifest.jsonl --embeddings " + d + "/emb128/embeddings.xdfe --out " +
                  d + "/p128",
              log) == 0);
  REQUIRE(cli("train --pairs " + d + "/p128/pairs_train.bin --classifier rf --out " + d + "/m.xdfm", log) == 0);
  CHECK(cli("eval --model " + d + "/m.xdfm --pairs " + d + "/p4096/pairs_test.bin", log) == 2);
  CHECK(cli("train --pairs " + d + "/p128/pairs_train.bin --classifier knn --out " + d + "/m2.xdfm", log) == 2);
  fs::remove_all(dir);
}
