#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <map>
#include <set>
#include <unistd.h>

#include "xdface/error.hpp"
#include "xdface/pairs.hpp"
#include "xdface/rng.hpp"

using namespace xdface;
namespace fs = std::filesystem;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an xdface::Error");
  return ErrorCode::Internal;
}

std::vector<std::string> subjects(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("subj" + std::to_string(i));
  return out;
}

struct Fixture {
  std::vector<PairUnit> units;
  EmbeddingStore store{kBackendOpenFace, 8};
};

Fixture fixture(const std::vector<std::string>& subs, int tags, std::uint64_t seed) {
  Fixture f;
  Rng rng = make_rng(seed, 77);
  std::normal_distribution<float> normal;
  auto vec = [&] {
    Eigen::VectorXf v(8);
    for (int k = 0; k < 8; ++k) v[k] = normal(rng);
    return v;
  };
  for (const auto& s : subs) {
    for (int t = 0; t < tags; ++t) {
      PairUnit u{s, t, s + "_selfie_t" + std::to_string(t), s + "_id_t" + std::to_string(t)};
      f.store.insert(u.selfie_id, vec());
      f.store.insert(u.id_doc_id, vec());
      f.units.push_back(u);
    }
  }
  return f;
}

std::vector<PairUnit> units_of(const std::vector<PairUnit>& all, const std::vector<std::string>& side) {
  const std::set<std::string> keep(side.begin(), side.end());
  std::vector<PairUnit> out;
  for (const auto& u : all) {
    if (keep.count(u.subject_id)) out.push_back(u);
  }
  return out;
}

}  // namespace

TEST_CASE("10 subjects split 8/2, disjoint and covering") {
  const auto ids = subjects(10);
  const SubjectSplit s = split_subjects(ids, {0.8, 5, std::nullopt});
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  std::set<std::string> all(s.train.begin(), s.train.end());
  for (const auto& t : s.test) CHECK(all.insert(t).second);
  CHECK(all == std::set<std::string>(ids.begin(), ids.end()));
}

TEST_CASE("split is seeded") {
  const auto ids = subjects(40);
  const SplitSpec a{0.8, 1, std::nullopt};
  CHECK(split_subjects(ids, a).train == split_subjects(ids, a).train);
  std::vector<std::string> shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(split_subjects(shuffled, a).train == split_subjects(ids, a).train);
  int differing = 0;
  for (std::uint64_t seed = 2; seed < 12; ++seed) {
    const SubjectSplit b = split_subjects(ids, {0.8, seed, std::nullopt});
    CHECK(b.train.size() == 32);
    CHECK(b.test.size() == 8);
    if (b.train != split_subjects(ids, a).train) ++differing;
  }
  CHECK(differing >= 9);
}

TEST_CASE("split errors and count rules") {
  CHECK(code_of([] { split_subjects({"only"}, {}); }) == ErrorCode::TooFewSubjects);
  CHECK(code_of([] { split_subjects({"a", "a"}, {}); }) == ErrorCode::TooFewSubjects);
  CHECK(code_of([] { train_subject_count(10, {1.5, 0, std::nullopt}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { train_subject_count(10, {0.8, 0, 11}); }) == ErrorCode::InvalidArgument);
  for (std::size_t n = 2; n < 300; ++n) {
    CHECK(train_subject_count(n, {}) == (n * 8) / 10);
  }
  CHECK(train_subject_count(108008, {}) == 86406);
  CHECK(train_subject_count(108008, {0.8, 0, 86404}) == 86404);
}

TEST_CASE("two subjects give two genuine and two crossing impostor pairs") {
  Fixture f = fixture({"a", "b"}, 1, 1);
  const auto pairs = generate_pairs(f.units, f.store, 9);
  REQUIRE(pairs.size() == 4);
  int genuine = 0;
  for (const auto& p : pairs) {
    if (p.label == Label::Genuine) {
      ++genuine;
      CHECK(p.subject_a == p.subject_b);
    } else {
      CHECK(p.subject_a != p.subject_b);
      CHECK(p.id_doc_id == p.subject_b + "_id_t0");
    }
  }
  CHECK(genuine == 2);
}

TEST_CASE("pair features, balance and tag alignment") {
  Fixture f = fixture(subjects(30), 3, 2);
  const auto pairs = generate_pairs(f.units, f.store, 11);
  CHECK(pairs.size() == 2 * f.units.size());
  std::size_t genuine = 0;
  for (const auto& p : pairs) {
    genuine += p.label == Label::Genuine;
    CHECK(p.selfie_id == p.subject_a + "_selfie_t" + std::to_string(p.tag));
    CHECK(p.id_doc_id == p.subject_b + "_id_t" + std::to_string(p.tag));
    const Eigen::VectorXd s = f.store.at(p.selfie_id).cast<double>();
    const Eigen::VectorXd d = f.store.at(p.id_doc_id).cast<double>();
    const Eigen::VectorXd expect = (s / s.norm() - d / d.norm()).cwiseAbs();
    CHECK((p.feature.cast<double>() - expect).cwiseAbs().maxCoeff() <= 1e-6);
  }
  CHECK(genuine * 2 == pairs.size());
  CHECK(generate_pairs(f.units, f.store, 11).size() == pairs.size());
  const auto again = generate_pairs(f.units, f.store, 11);
  for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(again[i].id_doc_id == pairs[i].id_doc_id);
}

TEST_CASE("impostors stay within their split side") {
  const auto ids = subjects(50);
  Fixture f = fixture(ids, 2, 3);
  const SubjectSplit split = split_subjects(ids, {0.8, 4, std::nullopt});
  for (const auto* side : {&split.train, &split.test}) {
    const std::set<std::string> members(side->begin(), side->end());
    for (const auto& p : generate_pairs(units_of(f.units, *side), f.store, 5)) {
      CHECK(members.count(p.subject_a) == 1);
      CHECK(members.count(p.subject_b) == 1);
    }
  }
}

TEST_CASE("impostor draws cover the other subjects") {
  const auto ids = subjects(5);
  Fixture f = fixture(ids, 1, 6);
  std::map<std::string, std::set<std::string>> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (const auto& p : generate_pairs(f.units, f.store, seed)) {
      if (p.label == Label::Impostor) seen[p.subject_a].insert(p.subject_b);
    }
  }
  for (const auto& s : ids) CHECK(seen[s].size() == 4);
}

TEST_CASE("pair generation errors") {
  Fixture f = fixture(subjects(4), 1, 7);
  EmbeddingStore partial(kBackendOpenFace, 8);
  for (const auto& [id, v] : f.store.records()) {
    if (id != "subj2_id_t0") partial.insert(id, v);
  }
  CHECK(code_of([&] { generate_pairs(f.units, partial, 1); }) == ErrorCode::IncompleteStore);
  std::vector<PairUnit> lonely{f.units[0]};
  CHECK(code_of([&] { generate_pairs(lonely, f.store, 1); }) == ErrorCode::TooFewSubjects);
}

TEST_CASE("to_matrix labels and pair file round trip") {
  Fixture f = fixture(subjects(6), 2, 8);
  const auto pairs = generate_pairs(f.units, f.store, 3);
  const PairMatrix m = to_matrix(pairs);
  REQUIRE(m.features.rows() == static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(m.labels[static_cast<Eigen::Index>(i)] == (pairs[i].label == Label::Genuine ? 1 : -1));
    CHECK(m.features.row(static_cast<Eigen::Index>(i)).transpose() == pairs[i].feature);
  }

  const fs::path dir = fs::temp_directory_path() / ("xdface_pairs_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  write_pairs(pairs, dir / "p.bin");
  CHECK(fs::file_size(dir / "p.bin") == 4 + 8 + pairs.size() * (1 + 8 * 4));
  CHECK(fs::exists(pair_index_path(dir / "p.bin")));
  const auto back = read_pairs(dir / "p.bin");
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back[i].label == pairs[i].label);
    CHECK(std::memcmp(back[i].feature.data(), pairs[i].feature.data(), 8 * sizeof(float)) == 0);
    CHECK(back[i].selfie_id == pairs[i].selfie_id);
    CHECK(back[i].subject_b == pairs[i].subject_b);
    CHECK(back[i].tag == pairs[i].tag);
  }
  std::ofstream(dir / "p.bin", std::ios::binary | std::ios::app) << 'x';
  CHECK(code_of([&] { read_pairs(dir / "p.bin"); }) == ErrorCode::FormatError);
  fs::remove_all(dir);
}

TEST_CASE("pair counts follow the 80/20 subject split") {
  for (int n : {10, 25, 50}) {
    const auto ids = subjects(n);
    Fixture f = fixture(ids, 1, 9);
    const SubjectSplit split = split_subjects(ids, {0.8, 1, std::nullopt});
    CHECK(generate_pairs(units_of(f.units, split.train), f.store, 1).size() == 2 * ((8 * n) / 10));
    CHECK(generate_pairs(units_of(f.units, split.test), f.store, 1).size() == 2 * (n - (8 * n) / 10));
  }
}
