// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include "xdface/classify.hpp"

#include "xdface/binary_io.hpp"

namespace xdface {

namespace {

constexpr char kModelMagic[4] = {'X', 'D', 'F', 'M'};
constexpr std::uint16_t kModelVersion = 1;

double logistic(double f) { return 1.0 / (1.0 + std::exp(-f)); }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void write_matrix(BinaryWriter& out, const Eigen::MatrixXd& m) {
  out.u32(static_cast<std::uint32_t>(m.rows()));
  out.u32(static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) out.f64(m.data()[i]);
}

Eigen::MatrixXd read_matrix(BinaryReader& in) {
  const auto rows = in.u32();
  const auto cols = in.u32();
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = in.f64();
  return m;
}

void write_forest(BinaryWriter& out, const ForestModel& f) {
  out.i32(f.params.n_trees);
  out.i32(f.params.max_features);
  out.i32(f.params.min_samples_split);
  out.u64(f.params.seed);
  out.i32(f.dim);
  out.u32(static_cast<std::uint32_t>(f.trees.size()));
  for (const auto& t : f.trees) {
    out.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      out.i32(n.feature);
      out.f64(n.threshold);
      out.i32(n.left);
      out.i32(n.right);
      out.u32(n.counts[0]);
      out.u32(n.counts[1]);
    }
  }
}

ForestModel read_forest(BinaryReader& in) {
  ForestModel f;
  f.params.n_trees = in.i32();
  f.params.max_features = in.i32();
  f.params.min_samples_split = in.i32();
  f.params.seed = in.u64();
  f.dim = in.i32();
  f.trees.resize(in.u32());
  for (auto& t : f.trees) {
    t.nodes.resize(in.u32());
    for (auto& n : t.nodes) {
      n.feature = in.i32();
      n.threshold = in.f64();
      n.left = in.i32();
      n.right = in.i32();
      n.counts[0] = in.u32();
      n.counts[1] = in.u32();
      const auto size = static_cast<std::int32_t>(t.nodes.size());
      if (n.feature >= f.dim || (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= size ||
                                                    n.right >= size))) {
        throw Error(ErrorCode::FormatError, "corrupt tree node in model file");
      }
    }
  }
  return f;
}

}  // namespace

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::LinearSvm: return "linear-svm";
    case ClassifierKind::PmSvm: return "pm-svm";
    case ClassifierKind::RandomForest: return "rf";
    case ClassifierKind::VotingForest: return "voting-rf";
  }
  return "?";
}

ClassifierKind parse_classifier(const std::string& name) {
  for (auto k : {ClassifierKind::LinearSvm, ClassifierKind::PmSvm, ClassifierKind::RandomForest,
                 ClassifierKind::VotingForest}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown classifier '" + name + "'");
}

ClassifierKind kind_of(const Model& model) {
  return std::visit(Overloaded{[](const LinearSvmModel&) { return ClassifierKind::LinearSvm; },
                               [](const PmSvmModel&) { return ClassifierKind::PmSvm; },
                               [](const ForestModel&) { return ClassifierKind::RandomForest; },
                               [](const VotingForestModel&) { return ClassifierKind::VotingForest; }},
                    model);
}

int model_dim(const Model& model) {
  return std::visit(Overloaded{[](const LinearSvmModel& m) { return static_cast<int>(m.weights.size()); },
                               [](const PmSvmModel& m) { return m.dim(); },
                               [](const ForestModel& m) { return m.dim; },
                               [](const VotingForestModel& m) { return m.forests.front().dim; }},
                    model);
}

int predict(const Model& model, const FeatureVector& x) {
  return std::visit(Overloaded{[&](const LinearSvmModel& m) { return m.decision(x) > 0.0 ? 1 : -1; },
                               [&](const PmSvmModel& m) { return m.decision(x) > 0.0 ? 1 : -1; },
                               [&](const ForestModel& m) { return m.genuine_fraction(x) > 0.5 ? 1 : -1; },
                               [&](const VotingForestModel& m) { return m.majority(x); }},
                    model);
}

double score(const Model& model, const FeatureVector& x) {
  return std::visit(Overloaded{[&](const LinearSvmModel& m) { return logistic(m.decision(x)); },
                               [&](const PmSvmModel& m) { return logistic(m.decision(x)); },
                               [&](const ForestModel& m) { return m.genuine_fraction(x); },
                               [&](const VotingForestModel& m) { return m.genuine_fraction(x); }},
                    model);
}

Model train(const FeatureMatrix& X, const LabelVector& y, const ClassifierConfig& config) {
  switch (config.kind) {
    case ClassifierKind::LinearSvm: return train_linear_svm(X, y, config.linear);
    case ClassifierKind::PmSvm: return train_pmsvm(X, y, config.pmsvm);
    case ClassifierKind::RandomForest: return train_rf(X, y, config.forest);
    case ClassifierKind::VotingForest: return train_voting_rf(X, y, config.voting_seeds, config.forest);
  }
  throw Error(ErrorCode::Internal, "unhandled classifier kind");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  BinaryWriter out(path);
  out.bytes(kModelMagic, 4);
  out.u16(kModelVersion);
  out.u8(static_cast<std::uint8_t>(kind_of(model)));
  std::visit(Overloaded{
                 [&](const LinearSvmModel& m) {
                   out.f64(m.params.C);
                   out.f64(m.params.tol);
                   out.i32(m.params.max_epochs);
                   out.u64(m.params.seed);
                   out.i32(m.epochs);
                   out.f64(m.primal);
                   out.f64(m.dual);
                   out.u32(static_cast<std::uint32_t>(m.primal_history.size()));
                   for (double v : m.primal_history) out.f64(v);
                   write_matrix(out, m.weights);
                   out.f64(m.bias);
                 },
                 [&](const PmSvmModel& m) {
                   out.f64(m.params.p);
                   out.f64(m.params.omega);
                   out.i32(m.params.knots);
                   out.f64(m.params.tol);
                   out.i32(m.params.max_epochs);
                   out.u64(m.params.seed);
                   out.f64(m.C);
                   out.f64(m.bias);
                   out.i32(m.epochs);
                   out.f64(m.primal);
                   out.f64(m.dual);
                   write_matrix(out, m.knots);
                   write_matrix(out, m.table);
                   write_matrix(out, m.support.cast<double>());
                   write_matrix(out, m.coef);
                 },
                 [&](const ForestModel& m) { write_forest(out, m); },
                 [&](const VotingForestModel& m) {
                   out.u32(static_cast<std::uint32_t>(m.forests.size()));
                   for (const auto& f : m.forests) write_forest(out, f);
                 }},
             model);
  out.close();
}

Model load_model(const std::filesystem::path& path) {
  BinaryReader in(path);
  char magic[4];
  in.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kModelMagic)) {
    throw Error(ErrorCode::FormatError, path.string() + ": not a model file");
  }
  if (in.u16() != kModelVersion) throw Error(ErrorCode::FormatError, path.string() + ": unsupported version");
  const auto kind = static_cast<ClassifierKind>(in.u8());
  Model model;
  switch (kind) {
    case ClassifierKind::LinearSvm: {
      LinearSvmModel m;
      m.params.C = in.f64();
      m.params.tol = in.f64();
      m.params.max_epochs = in.i32();
      m.params.seed = in.u64();
      m.epochs = in.i32();
      m.primal = in.f64();
      m.dual = in.f64();
      m.primal_history.resize(in.u32());
      for (double& v : m.primal_history) v = in.f64();
      m.weights = read_matrix(in);
      m.bias = in.f64();
      model = std::move(m);
      break;
    }
    case ClassifierKind::PmSvm: {
      PmSvmModel m;
      m.params.p = in.f64();
      m.params.omega = in.f64();
      m.params.knots = in.i32();
      m.params.tol = in.f64();
      m.params.max_epochs = in.i32();
      m.params.seed = in.u64();
      m.C = in.f64();
      m.bias = in.f64();
      m.epochs = in.i32();
      m.primal = in.f64();
      m.dual = in.f64();
      m.knots = read_matrix(in);
      m.table = read_matrix(in);
      m.support = read_matrix(in).cast<float>();
      m.coef = read_matrix(in);
      model = std::move(m);
      break;
    }
    case ClassifierKind::RandomForest:
      model = read_forest(in);
      break;
    case ClassifierKind::VotingForest: {
      VotingForestModel m;
      m.forests.resize(in.u32());
      if (m.forests.size() != kVotingForests) throw Error(ErrorCode::FormatError, "voting model needs 5 forests");
      for (auto& f : m.forests) f = read_forest(in);
      model = std::move(m);
      break;
    }
    default:
      throw Error(ErrorCode::FormatError, path.string() + ": unknown model kind");
  }
  in.expect_end();
  return model;
}

}  // namespace xdface
