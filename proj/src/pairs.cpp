// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "xdface/binary_io.hpp"
#include "xdface/rng.hpp"

namespace xdface {

std::size_t train_subject_count(std::size_t n, const SplitSpec& spec) {
  if (spec.train_count) {
    if (*spec.train_count > n) {
      throw Error(ErrorCode::InvalidArgument, "train subject override exceeds subject count");
    }
    return *spec.train_count;
  }
  if (!(spec.train_fraction >= 0.0 && spec.train_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train fraction must lie in [0,1]");
  }
  // The epsilon absorbs representation error in e.g. 0.8 * 10.
  return static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
}

SubjectSplit split_subjects(const std::vector<std::string>& subject_ids, const SplitSpec& spec) {
  std::vector<std::string> ids = subject_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) throw Error(ErrorCode::TooFewSubjects, "need at least 2 subjects to split");
  const std::size_t k = train_subject_count(ids.size(), spec);

  Rng rng(mix_key(spec.seed, 0x5917));
  for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[uniform_index(rng, i + 1)]);

  SubjectSplit split;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<PairRecord> generate_pairs(const std::vector<PairUnit>& units, const EmbeddingStore& store,
                                       std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_tag;
  for (std::size_t i = 0; i < units.size(); ++i) by_tag[units[i].tag].push_back(i);
  for (const auto& [tag, members] : by_tag) {
    std::set<std::string> subjects;
    for (auto i : members) subjects.insert(units[i].subject_id);
    if (subjects.size() < 2) {
      throw Error(ErrorCode::TooFewSubjects,
                  "tag " + std::to_string(tag) + " has fewer than 2 subjects for impostor pairs");
    }
  }

  auto feature = [&](const std::string& selfie, const std::string& id_doc) -> Eigen::VectorXf {
    return abs_difference(l2_normalize(store.at(selfie)), l2_normalize(store.at(id_doc)));
  };

  std::vector<PairRecord> pairs;
  pairs.reserve(units.size() * 2);
  for (const auto& unit : units) {
    PairRecord genuine{unit.selfie_id, unit.id_doc_id, unit.subject_id, unit.subject_id,
                       unit.tag,       Label::Genuine, feature(unit.selfie_id, unit.id_doc_id)};
    pairs.push_back(std::move(genuine));

    const auto& members = by_tag[unit.tag];
    Rng rng = make_rng(seed, fnv1a(unit.subject_id), static_cast<std::uint64_t>(unit.tag));
    const PairUnit* other = nullptr;
    do {
      other = &units[members[uniform_index(rng, members.size())]];
    } while (other->subject_id == unit.subject_id);

    PairRecord impostor{unit.selfie_id, other->id_doc_id, unit.subject_id, other->subject_id,
                        unit.tag,       Label::Impostor,  feature(unit.selfie_id, other->id_doc_id)};
    pairs.push_back(std::move(impostor));
  }
  return pairs;
}

PairMatrix to_matrix(const std::vector<PairRecord>& pairs) {
  PairMatrix m;
  const Eigen::Index dim = pairs.empty() ? 0 : pairs.front().feature.size();
  m.features.resize(static_cast<Eigen::Index>(pairs.size()), dim);
  m.labels.resize(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].feature.size() != dim) throw Error(ErrorCode::DimMismatch, "ragged pair features");
    m.features.row(static_cast<Eigen::Index>(i)) = pairs[i].feature.transpose();
    m.labels[static_cast<Eigen::Index>(i)] = pairs[i].label == Label::Genuine ? 1 : -1;
  }
  return m;
}

std::filesystem::path pair_index_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".idx";
  return p;
}

void write_pairs(const std::vector<PairRecord>& pairs, const std::filesystem::path& path) {
  const std::uint32_t dim = pairs.empty() ? 0 : static_cast<std::uint32_t>(pairs.front().feature.size());
  BinaryWriter out(path);
  out.u32(dim);
  out.u64(pairs.size());
  std::ofstream index(pair_index_path(path), std::ios::trunc);
  if (!index) throw Error(ErrorCode::IoError, "cannot write " + pair_index_path(path).string());
  std::size_t row = 0;
  for (const auto& p : pairs) {
    if (p.feature.size() != dim) throw Error(ErrorCode::DimMismatch, "ragged pair features");
    out.u8(static_cast<std::uint8_t>(p.label));
    for (Eigen::Index i = 0; i < p.feature.size(); ++i) out.f32(p.feature[i]);
    index << row++ << '\t' << p.subject_a << '\t' << p.subject_b << '\t' << p.selfie_id << '\t'
          << p.id_doc_id << '\t' << p.tag << '\n';
  }
  out.close();
}

std::vector<PairRecord> read_pairs(const std::filesystem::path& path) {
  BinaryReader in(path);
  const std::uint32_t dim = in.u32();
  const std::uint64_t count = in.u64();
  std::vector<PairRecord> pairs(count);
  for (auto& p : pairs) {
    const std::uint8_t label = in.u8();
    if (label > 1) throw Error(ErrorCode::FormatError, path.string() + ": bad label byte");
    p.label = static_cast<Label>(label);
    p.feature.resize(dim);
    for (std::uint32_t i = 0; i < dim; ++i) p.feature[i] = in.f32();
  }
  in.expect_end();

  std::ifstream index(pair_index_path(path));
  if (index) {
    std::string line;
    std::size_t row = 0;
    while (std::getline(index, line) && row < pairs.size()) {
      std::istringstream fields(line);
      std::string row_s, tag_s;
      auto& p = pairs[row++];
      std::getline(fields, row_s, '\t');
      std::getline(fields, p.subject_a, '\t');
      std::getline(fields, p.subject_b, '\t');
      std::getline(fields, p.selfie_id, '\t');
      std::getline(fields, p.id_doc_id, '\t');
      std::getline(fields, tag_s, '\t');
      p.tag = tag_s.empty() ? 0 : std::stoi(tag_s);
    }
  }
  return pairs;
}

}  // namespace xdface
