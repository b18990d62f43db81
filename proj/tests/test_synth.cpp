#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <unistd.h>

#include "xdface/classify.hpp"
#include "xdface/error.hpp"
#include "xdface/pairs.hpp"
#include "xdface/synth.hpp"

using namespace xdface;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("xdface_synth_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Eigen::ArrayXd gray(const Image& img) {
  Eigen::ArrayXd g(static_cast<Eigen::Index>(img.pixel_count()));
  const auto d = img.data();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto k = static_cast<std::size_t>(i) * 3;
    g[i] = (d[k] + d[k + 1] + d[k + 2]) / 3.0;
  }
  return g;
}

double correlation(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  const Eigen::ArrayXd x = a - a.mean();
  const Eigen::ArrayXd y = b - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

struct Norms {
  std::vector<double> genuine, impostor;
};

Norms diff_norms(const SynthSpec& spec) {
  const auto [selfie, id] = synth_embeddings(spec);
  Norms n;
  for (int s = 0; s < spec.n_subjects; ++s) {
    const std::string a = synth_subject_id(s);
    const std::string b = synth_subject_id((s + 1) % spec.n_subjects);
    const Eigen::VectorXf v = selfie.at(synth_image_id(a, Role::Selfie));
    n.genuine.push_back((v - id.at(synth_image_id(a, Role::IdDoc))).norm());
    n.impostor.push_back((v - id.at(synth_image_id(b, Role::IdDoc))).norm());
  }
  return n;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double held_out_accuracy(const SynthSpec& spec) {
  auto [selfie, id] = synth_embeddings(spec);
  EmbeddingStore store(selfie.backend_tag(), selfie.dim());
  std::vector<PairUnit> units;
  std::vector<std::string> subjects;
  for (int s = 0; s < spec.n_subjects; ++s) {
    const std::string subj = synth_subject_id(s);
    const std::string si = synth_image_id(subj, Role::Selfie);
    const std::string ii = synth_image_id(subj, Role::IdDoc);
    store.insert(si, selfie.at(si));
    store.insert(ii, id.at(ii));
    units.push_back({subj, 0, si, ii});
    subjects.push_back(subj);
  }
  const SubjectSplit split = split_subjects(subjects, {0.8, 1, std::nullopt});
  auto side = [&](const std::vector<std::string>& keep) {
    const std::set<std::string> k(keep.begin(), keep.end());
    std::vector<PairUnit> out;
    for (const auto& u : units)
      if (k.count(u.subject_id)) out.push_back(u);
    return to_matrix(generate_pairs(out, store, 3));
  };
  const PairMatrix train = side(split.train);
  const PairMatrix test = side(split.test);
  const Model m = train_linear_svm(train.features, train.labels);
  int ok = 0;
  for (Eigen::Index i = 0; i < test.features.rows(); ++i) {
    ok += predict(m, test.features.row(i).transpose()) == test.labels[i];
  }
  return static_cast<double>(ok) / static_cast<double>(test.features.rows());
}

}  // namespace

TEST_CASE("synth_images: 50 subjects give 100 images") {
  const fs::path dir = scratch("images");
  SynthSpec spec;
  spec.image_size = 64;
  spec.seed = 4;
  const Manifest m = synth_images(spec, dir / "a");
  REQUIRE(m.rows.size() == 100);
  std::set<std::string> subjects, ids;
  int selfies = 0;
  for (const auto& r : m.rows) {
    subjects.insert(r.subject_id);
    ids.insert(r.image_id);
    selfies += r.role == Role::Selfie;
    CHECK(fs::exists(m.resolve(r)));
    CHECK(r.stage == Stage::Raw);
    CHECK(r.box.x + r.box.w <= 64);
    CHECK(r.box.y + r.box.h <= 64);
  }
  CHECK(subjects.size() == 50);
  CHECK(ids.size() == 100);
  CHECK(selfies == 50);
  CHECK_NOTHROW(validate_manifest(m));

  const Manifest again = synth_images(spec, dir / "b", 3);
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    CHECK(slurp(m.resolve(m.rows[i])) == slurp(again.resolve(again.rows[i])));
  }
  fs::remove_all(dir);
}

TEST_CASE("selfie and ID renderings differ but keep the identity pattern") {
  SynthSpec spec;
  spec.n_subjects = 20;
  spec.image_size = 64;
  double genuine_corr = 0, cross_corr = 0;
  for (int s = 0; s < spec.n_subjects; ++s) {
    const SynthFace a = synth_face(spec, s);
    const SynthFace b = synth_face(spec, (s + 1) % spec.n_subjects);
    CHECK(mean_abs_diff(a.selfie, a.id_doc) > 5.0);
    genuine_corr += correlation(gray(a.selfie), gray(a.id_doc));
    cross_corr += correlation(gray(a.selfie), gray(b.selfie));
  }
  CHECK(genuine_corr / spec.n_subjects > cross_corr / spec.n_subjects);
  CHECK(synth_face(spec, 3).selfie == synth_face(spec, 3).selfie);
}

TEST_CASE("synth spec validation and naming") {
  SynthSpec bad;
  bad.n_subjects = 1;
  try {
    validate(bad);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSubjects);
  }
  CHECK(synth_subject_id(7) == "s000007");
  CHECK(synth_image_id("s000007", Role::IdDoc) == "s000007_id");
  const ParsedImageId p = parse_synth_image_id("s000007_selfie_t5");
  CHECK(p.subject_id == "s000007");
  CHECK(p.role == Role::Selfie);
  CHECK(p.tag == 5);
  CHECK(parse_synth_image_id("s000002_id").role == Role::IdDoc);
}

TEST_CASE("noise-free unshifted oracle makes genuine differences vanish") {
  SynthSpec spec;
  spec.n_subjects = 30;
  spec.noise_sigma = 0.0;
  spec.domain_shift = 0.0;
  const Norms n = diff_norms(spec);
  for (double g : n.genuine) CHECK(g == 0.0);
  for (double i : n.impostor) CHECK(i > 0.1);
}

TEST_CASE("distortion has unit spectral norm") {
  SynthSpec spec;
  spec.embedding_dim = 32;
  const EmbeddingOracle oracle(spec);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(oracle.distortion());
  CHECK(svd.singularValues()[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("default oracle separates genuine from impostor by three pooled sd") {
  SynthSpec spec;
  spec.n_subjects = 2000;
  spec.seed = 11;
  const Norms n = diff_norms(spec);
  const double pooled = std::sqrt((variance(n.genuine) + variance(n.impostor)) / 2.0);
  CHECK(mean(n.impostor) - mean(n.genuine) > 3.0 * pooled);
}

TEST_CASE("oracle vectors are unit norm and deterministic") {
  for (int dim : {128, 4096}) {
    SynthSpec spec;
    spec.n_subjects = dim == 128 ? 200 : 10;
    spec.embedding_dim = dim;
    spec.noise_sigma = 0.7;
    const auto [s1, i1] = synth_embeddings(spec);
    const auto [s2, i2] = synth_embeddings(spec);
    CHECK(s1.dim() == dim);
    CHECK(s1.backend_tag() == backend_for_dim(dim));
    for (const auto* store : {&s1, &i1}) {
      for (const auto& [id, v] : store->records()) CHECK(std::abs(v.cast<double>().norm() - 1.0) <= 1e-6);
    }
    for (const auto& [id, v] : s1.records()) CHECK(s2.at(id) == v);
    for (const auto& [id, v] : i1.records()) CHECK(i2.at(id) == v);
  }
  SynthSpec spec;
  const EmbeddingOracle oracle(spec);
  CHECK(oracle.embed("s000001", Role::Selfie, 0) != oracle.embed("s000001", Role::Selfie, 3));
}

TEST_CASE("separability falls as noise grows") {
  SynthSpec low;
  low.n_subjects = 400;
  low.noise_sigma = 0.05;
  SynthSpec high = low;
  high.noise_sigma = 0.5;
  const double a = held_out_accuracy(low);
  const double b = held_out_accuracy(high);
  CHECK(a >= b);
  const Norms nl = diff_norms(low);
  const Norms nh = diff_norms(high);
  CHECK(mean(nl.genuine) < mean(nh.genuine));
}

TEST_CASE("in-process extractor protocol") {
  SynthSpec spec;
  std::istringstream in("s000001_selfie_t2\t/dev/null\ns000004_id\t/dev/null\n");
  std::ostringstream out, err;
  CHECK(serve_extractor(spec, in, out, err) == 0);
  std::istringstream lines(out.str());
  std::string id;
  lines >> id;
  CHECK(id == "s000001_selfie_t2");
  const Eigen::VectorXf expect = EmbeddingOracle(spec).embed("s000001", Role::Selfie, 2);
  for (int k = 0; k < 128; ++k) {
    float v = 0;
    lines >> v;
    CHECK(v == doctest::Approx(expect[k]).epsilon(1e-6));
  }
  std::istringstream missing("s000001_selfie\t/nonexistent/file.ppm\n");
  std::ostringstream out2, err2;
  CHECK(serve_extractor(spec, missing, out2, err2) != 0);
}

TEST_CASE("CLI serves as an external extractor") {
  const fs::path dir = scratch("serve");
  SynthSpec spec;
  spec.n_subjects = 5;
  spec.image_size = 32;
  const Manifest m = synth_images(spec, dir);
  std::vector<ExtractorJob> jobs;
  for (const auto& r : m.rows) jobs.push_back({r.image_id, m.resolve(r)});
  REQUIRE(jobs.size() == 10);
  const std::string cmd = std::string("'") + XDFACE_CLI_PATH + "' synth-embeddings --serve";
  const EmbeddingStore s = extract_via_external(cmd, jobs, kBackendOpenFace, 128);
  CHECK(s.size() == 10);
  CHECK(s.dim() == 128);
  const EmbeddingOracle oracle(SynthSpec{});
  const Eigen::VectorXf expect = oracle.embed("s000003", Role::IdDoc, 0);
  CHECK((s.at("s000003_id") - expect).cwiseAbs().maxCoeff() <= 1e-6f);
  fs::remove_all(dir);
}
