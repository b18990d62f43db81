// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/manifest.hpp"

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <utility>

#include "xdface/error.hpp"

namespace xdface {

using nlohmann::json;

std::string to_string(Role role) { return role == Role::Selfie ? "selfie" : "id"; }

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Raw: return "raw";
    case Stage::Chip: return "chip";
    case Stage::Normalized: return "normalized";
    case Stage::Augmented: return "augmented";
  }
  return "?";
}

Role parse_role(const std::string& s) {
  if (s == "selfie") return Role::Selfie;
  if (s == "id") return Role::IdDoc;
  throw Error(ErrorCode::FormatError, "unknown role '" + s + "'");
}

Stage parse_stage(const std::string& s) {
  for (auto st : {Stage::Raw, Stage::Chip, Stage::Normalized, Stage::Augmented})
    if (to_string(st) == s) return st;
  throw Error(ErrorCode::FormatError, "unknown stage '" + s + "'");
}

std::filesystem::path Manifest::resolve(const ManifestRow& row) const {
  const std::filesystem::path p(row.path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestRow r;
      r.image_id = j.at("image_id").get<std::string>();
      r.subject_id = j.at("subject_id").get<std::string>();
      r.role = parse_role(j.at("role").get<std::string>());
      r.path = j.at("path").get<std::string>();
      const auto box = j.at("box").get<std::vector<int>>();
      const auto le = j.at("left_eye").get<std::vector<double>>();
      const auto re = j.at("right_eye").get<std::vector<double>>();
      if (box.size() != 4 || le.size() != 2 || re.size() != 2) {
        throw Error(ErrorCode::FormatError, "box needs 4 and eyes 2 coordinates");
      }
      r.box = Rect{box[0], box[1], box[2], box[3]};
      r.left_eye = {le[0], le[1]};
      r.right_eye = {re[0], re[1]};
      r.augment_tag = j.value("augment_tag", 0);
      r.stage = parse_stage(j.value("stage", std::string("raw")));
      if (r.box.w <= 0 || r.box.h <= 0) throw Error(ErrorCode::FormatError, r.image_id + ": box without area");
      m.rows.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(line_no) + ": " + e.message());
    }
  }
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write manifest " + path.string());
  // Relative paths are re-anchored at the directory the manifest is written to.
  const std::filesystem::path parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto target_dir = std::filesystem::absolute(parent).lexically_normal();
  auto stored_path = [&](const ManifestRow& r) {
    const std::filesystem::path p(r.path);
    if (p.is_absolute() || manifest.base_dir.empty()) return p;
    return std::filesystem::absolute(manifest.base_dir / p).lexically_normal().lexically_relative(target_dir);
  };
  for (const auto& r : manifest.rows) {
    json j;
    j["image_id"] = r.image_id;
    j["subject_id"] = r.subject_id;
    j["role"] = to_string(r.role);
    j["path"] = stored_path(r).generic_string();
    j["box"] = {r.box.x, r.box.y, r.box.w, r.box.h};
    j["left_eye"] = {r.left_eye.x(), r.left_eye.y()};
    j["right_eye"] = {r.right_eye.x(), r.right_eye.y()};
    j["augment_tag"] = r.augment_tag;
    j["stage"] = to_string(r.stage);
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

void validate_manifest(const Manifest& manifest) {
  std::set<std::string> ids;
  // subject -> stage -> (has selfie, has id)
  std::map<std::string, std::map<Stage, std::pair<bool, bool>>> coverage;
  for (const auto& r : manifest.rows) {
    if (!ids.insert(r.image_id).second) {
      throw Error(ErrorCode::FormatError, "duplicate image id " + r.image_id);
    }
    auto& c = coverage[r.subject_id][r.stage];
    (r.role == Role::Selfie ? c.first : c.second) = true;
  }
  for (const auto& [subject, stages] : coverage) {
    for (const auto& [stage, c] : stages) {
      if (!c.first || !c.second) {
        throw Error(ErrorCode::ManifestIncomplete,
                    "subject " + subject + " has no " + (c.first ? "id" : "selfie") + " row at stage " +
                        to_string(stage));
      }
    }
  }
}

}  // namespace xdface
