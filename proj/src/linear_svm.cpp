// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xdface/classify.hpp"
#include "xdface/rng.hpp"

namespace xdface {

void check_training_data(const FeatureMatrix& X, const LabelVector& y) {
  if (X.rows() != y.size()) throw Error(ErrorCode::DimMismatch, "feature rows and labels differ in count");
  if (X.rows() == 0) throw Error(ErrorCode::DegenerateLabels, "no training samples");
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] == 1) {
      pos = true;
    } else if (y[i] == -1) {
      neg = true;
    } else {
      throw Error(ErrorCode::InvalidArgument, "labels must be +1 or -1");
    }
  }
  if (!pos || !neg) throw Error(ErrorCode::DegenerateLabels, "training data holds a single class");
}

double LinearSvmModel::decision(const FeatureVector& x) const {
  if (x.size() != weights.size()) {
    throw Error(ErrorCode::DimMismatch, "linear SVM expects dim " + std::to_string(weights.size()));
  }
  return weights.dot(x.cast<double>()) + bias;
}

LinearSvmModel train_linear_svm(const FeatureMatrix& X, const LabelVector& y,
                                const LinearSvmParams& params) {
  check_training_data(X, y);
  if (!(params.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be > 0");
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();

  // Augmented samples [x, 1] so the bias is the last weight.
  Eigen::MatrixXd Xa(n, d + 1);
  Xa.leftCols(d) = X.cast<double>();
  Xa.col(d).setOnes();
  const Eigen::VectorXd yd = y.cast<double>();
  const Eigen::VectorXd qd = Xa.rowwise().squaredNorm();

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd best_w = w;
  double best_primal = std::numeric_limits<double>::infinity();
  const double C = params.C;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  LinearSvmModel model;
  model.params = params;
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);

    for (Eigen::Index i : order) {
      const double G = yd[i] * Xa.row(i).dot(w) - 1.0;
      double pg = G;
      if (alpha[i] <= 0.0) {
        pg = std::min(G, 0.0);
      } else if (alpha[i] >= C) {
        pg = std::max(G, 0.0);
      }
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - G / qd[i], 0.0, C);
        w += ((alpha[i] - old) * yd[i]) * Xa.row(i).transpose();
      }
    }

    const double half_ww = 0.5 * w.squaredNorm();
    const Eigen::VectorXd margins = (Xa * w).cwiseProduct(yd);
    const double primal = half_ww + C * (1.0 - margins.array()).max(0.0).sum();
    const double dual = alpha.sum() - half_ww;
    if (primal < best_primal) {
      best_primal = primal;
      best_w = w;
    }
    model.primal_history.push_back(best_primal);
    model.epochs = epoch + 1;
    model.dual = dual;
    if (best_primal - dual <= params.tol * (1.0 + std::abs(best_primal))) break;
  }

  model.weights = best_w.head(d);
  model.bias = best_w[d];
  model.primal = best_primal;
  return model;
}

}  // namespace xdface
