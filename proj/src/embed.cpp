// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/embed.hpp"

#include "xdface/binary_io.hpp"

namespace xdface {

namespace {
constexpr char kStoreMagic[4] = {'X', 'D', 'F', 'E'};
constexpr std::uint16_t kStoreVersion = 1;
}  // namespace

EmbeddingVector l2_normalize(const EmbeddingVector& v) {
  EmbeddingVector out{v.image_id, l2_normalize(v.values), true};
  return out;
}

int backend_dim(const std::string& backend) {
  if (backend == kBackendVgg) return 4096;
  if (backend == kBackendOpenFace) return 128;
  throw Error(ErrorCode::InvalidArgument, "unknown backend '" + backend + "'");
}

int backend_chip_size(const std::string& backend) {
  if (backend == kBackendVgg) return 224;
  if (backend == kBackendOpenFace) return 96;
  throw Error(ErrorCode::InvalidArgument, "unknown backend '" + backend + "'");
}

std::string backend_for_dim(int dim) {
  if (dim == 4096) return kBackendVgg;
  if (dim == 128) return kBackendOpenFace;
  return "custom-" + std::to_string(dim);
}

void EmbeddingStore::insert(const std::string& image_id, Eigen::VectorXf values) {
  if (values.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, image_id + ": expected dim " + std::to_string(dim_) +
                                            ", got " + std::to_string(values.size()));
  }
  if (!records_.emplace(image_id, std::move(values)).second) {
    throw Error(ErrorCode::InvalidArgument, "duplicate embedding for " + image_id);
  }
}

const Eigen::VectorXf& EmbeddingStore::at(const std::string& image_id) const {
  auto it = records_.find(image_id);
  if (it == records_.end()) throw Error(ErrorCode::IncompleteStore, "no embedding for " + image_id);
  return it->second;
}

void EmbeddingStore::require(const std::vector<std::string>& image_ids) const {
  for (const auto& id : image_ids) {
    if (!contains(id)) throw Error(ErrorCode::IncompleteStore, "no embedding for " + id);
  }
}

void write_embedding_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  BinaryWriter out(path);
  out.bytes(kStoreMagic, 4);
  out.u16(kStoreVersion);
  out.u32(static_cast<std::uint32_t>(store.dim()));
  out.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& [id, v] : store.records()) {
    if (id.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "image id too long: " + id);
    out.u16(static_cast<std::uint16_t>(id.size()));
    out.bytes(id.data(), id.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out.f32(v[i]);
  }
  out.close();
}

EmbeddingStore import_embeddings(const std::filesystem::path& path) {
  BinaryReader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kStoreMagic)) {
    throw Error(ErrorCode::FormatError, path.string() + ": not an embedding store");
  }
  if (in.u16() != kStoreVersion) {
    throw Error(ErrorCode::FormatError, path.string() + ": unsupported store version");
  }
  const int dim = static_cast<int>(in.u32());
  const std::uint32_t count = in.u32();
  EmbeddingStore store(backend_for_dim(dim), dim);
  std::string id;
  for (std::uint32_t r = 0; r < count; ++r) {
    id.resize(in.u16());
    in.bytes(id.data(), id.size());
    Eigen::VectorXf v(dim);
    for (int i = 0; i < dim; ++i) v[i] = in.f32();
    store.insert(id, std::move(v));
  }
  in.expect_end();
  return store;
}

}  // namespace xdface
