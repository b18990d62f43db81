// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "xdface/error.hpp"

namespace xdface {

// Training data: rows of X are samples; y holds +1 (genuine) / -1 (impostor).
using FeatureMatrix = Eigen::Ref<const Eigen::MatrixXf>;
using FeatureVector = Eigen::Ref<const Eigen::VectorXf>;
using LabelVector = Eigen::Ref<const Eigen::VectorXi>;

/// Throws DegenerateLabels unless both classes are present and labels are +-1.
void check_training_data(const FeatureMatrix& X, const LabelVector& y);

// --- Linear SVM -------------------------------------------------------------------

struct LinearSvmParams {
  double C = 1.0;
  double tol = 1e-3;  // relative duality gap
  int max_epochs = 1000;
  std::uint64_t seed = 0;
};

struct LinearSvmModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  LinearSvmParams params;
  // Training diagnostics (persisted with the model).
  int epochs = 0;
  double primal = 0.0;
  double dual = 0.0;
  std::vector<double> primal_history;  // best primal objective after each epoch

  double decision(const FeatureVector& x) const;
};

/// min 1/2 |w|^2 + C sum hinge(y (w.x + b)) by dual coordinate descent; the
/// bias is learned as the weight of a constant unit feature.
LinearSvmModel train_linear_svm(const FeatureMatrix& X, const LabelVector& y,
                                const LinearSvmParams& params = {});

// --- Power mean SVM ---------------------------------------------------------------

/// M_p(a, b) = ((a^p + b^p) / 2)^(1/p) for p < 0, sqrt(ab) at p = 0, min(a, b)
/// at p = -inf, and 0 whenever a or b is 0.
double power_mean(double a, double b, double p);

/// Additive power mean kernel sum_i M_p(x_i, z_i). Throws NegativeFeature.
template <typename DX, typename DZ>
double power_mean_kernel(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DZ>& z, double p) {
  if (x.size() != z.size()) throw Error(ErrorCode::DimMismatch, "kernel operands differ in size");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = static_cast<double>(x(i));
    const double b = static_cast<double>(z(i));
    if (a < 0.0 || b < 0.0) throw Error(ErrorCode::NegativeFeature, "power mean kernel needs x, z >= 0");
    sum += power_mean(a, b, p);
  }
  return sum;
}

struct PmSvmParams {
  double p = -1.0;
  double omega = 0.01;  // regularization weight; C = 1 / omega
  int knots = 128;      // table resolution per dimension
  double tol = 1e-3;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
};

struct PmSvmModel {
  PmSvmParams params;
  double C = 0.0;
  double bias = 0.0;
  // Per-dimension lookup tables: knots(k, d) are sample positions in
  // [0, upper_d]; table(k, d) holds sum_j alpha_j y_j M_p(knots(k, d), x_jd).
  Eigen::MatrixXd knots;
  Eigen::MatrixXd table;
  // Support vectors and their signed dual coefficients alpha_j y_j.
  Eigen::MatrixXf support;
  Eigen::VectorXd coef;
  int epochs = 0;
  double primal = 0.0;
  double dual = 0.0;

  int dim() const { return static_cast<int>(table.cols()); }
  /// Table evaluation with local cubic fits between knots. A coordinate past
  /// the last knot is summed directly over the support vectors instead.
  double decision(const FeatureVector& x) const;
  /// Direct kernel expansion over the support vectors.
  double decision_exact(const FeatureVector& x) const;
};

PmSvmModel train_pmsvm(const FeatureMatrix& X, const LabelVector& y, const PmSvmParams& params = {});

// --- Random forests ---------------------------------------------------------------

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x[feature] <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::array<std::uint32_t, 2> counts{};  // {impostor, genuine} training samples
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  /// +1 / -1 by leaf majority; a tied leaf votes impostor.
  int vote(const FeatureVector& x) const;
  int depth() const;
};

struct ForestParams {
  int n_trees = 100;
  int max_features = 0;  // 0 means floor(sqrt(dim))
  int min_samples_split = 2;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct ForestModel {
  ForestParams params;
  int dim = 0;
  std::vector<DecisionTree> trees;

  double genuine_fraction(const FeatureVector& x) const;
};

ForestModel train_rf(const FeatureMatrix& X, const LabelVector& y, const ForestParams& params = {});

inline constexpr int kVotingForests = 5;

struct VotingForestModel {
  std::vector<ForestModel> forests;

  int majority(const FeatureVector& x) const;
  double genuine_fraction(const FeatureVector& x) const;
};

/// Five forests with the given seeds. Throws SeedCollision on repeated seeds.
VotingForestModel train_voting_rf(const FeatureMatrix& X, const LabelVector& y,
                                  const std::array<std::uint64_t, kVotingForests>& seeds,
                                  const ForestParams& base = {});

// --- Uniform interface ------------------------------------------------------------

enum class ClassifierKind : std::uint8_t { LinearSvm = 1, PmSvm = 2, RandomForest = 3, VotingForest = 4 };

std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier(const std::string& name);

using Model = std::variant<LinearSvmModel, PmSvmModel, ForestModel, VotingForestModel>;

ClassifierKind kind_of(const Model& model);
int model_dim(const Model& model);

/// +1 genuine / -1 impostor. Decision value 0 and vote ties map to impostor.
int predict(const Model& model, const FeatureVector& x);
/// In [0,1]: logistic squash of the margin for SVMs, genuine-vote fraction for forests.
double score(const Model& model, const FeatureVector& x);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::VotingForest;
  LinearSvmParams linear;
  PmSvmParams pmsvm;
  ForestParams forest;
  std::array<std::uint64_t, kVotingForests> voting_seeds{1, 2, 3, 4, 5};
};

Model train(const FeatureMatrix& X, const LabelVector& y, const ClassifierConfig& config);

// Binary model file: "XDFM", u16 version, u8 kind, then hyperparameters and
// parameters of that kind; doubles are stored bit-exact.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace xdface
