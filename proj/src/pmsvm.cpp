// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

// Power mean SVM: dual coordinate descent over the additive power mean
// kernel. The per-dimension function g_d(t) = sum_j alpha_j y_j M_p(t, x_jd)
// is kept as values on a fixed set of knots and read back through local cubic
// fits, so a gradient or a prediction costs O(dim) instead of O(n * dim).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xdface/classify.hpp"
#include "xdface/rng.hpp"

namespace xdface {

double power_mean(double a, double b, double p) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  if (p == -std::numeric_limits<double>::infinity()) return std::min(a, b);
  if (p == 0.0) return std::sqrt(a * b);
  if (p == -1.0) return 2.0 * a * b / (a + b);
  return std::pow((std::pow(a, p) + std::pow(b, p)) / 2.0, 1.0 / p);
}

namespace {

constexpr double kHeadroom = 1.25;

// col += coef * M_p(t_k, x) for every knot t_k.
void accumulate_kernel(Eigen::Ref<Eigen::VectorXd> col, const Eigen::Ref<const Eigen::VectorXd>& t,
                       double x, double coef, double p) {
  if (x <= 0.0) return;
  if (p == -1.0) {
    col.array() += coef * (2.0 * x) * t.array() / (t.array() + x);
  } else {
    for (Eigen::Index k = 0; k < t.size(); ++k) col[k] += coef * power_mean(t[k], x, p);
  }
}

// Cubic through the four knots around t.
double interpolate(const Eigen::Ref<const Eigen::VectorXd>& knots,
                   const Eigen::Ref<const Eigen::VectorXd>& values, double t) {
  const Eigen::Index m = knots.size();
  const double upper = knots[m - 1];
  if (upper <= 0.0) return 0.0;
  t = std::clamp(t, 0.0, upper);
  auto seg = static_cast<Eigen::Index>(std::sqrt(t / upper) * static_cast<double>(m - 1));
  seg = std::clamp<Eigen::Index>(seg, 0, m - 2);
  const Eigen::Index s = std::clamp<Eigen::Index>(seg - 1, 0, m - 4);
  double result = 0.0;
  for (int a = 0; a < 4; ++a) {
    double basis = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      basis *= (t - knots[s + b]) / (knots[s + a] - knots[s + b]);
    }
    result += basis * values[s + a];
  }
  return result;
}

double lut_decision(const PmSvmModel& m, const Eigen::Ref<const Eigen::VectorXf>& x) {
  double f = m.bias;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double v = x[d];
    if (v < 0.0) throw Error(ErrorCode::NegativeFeature, "PmSVM features must be >= 0");
    if (v <= 0.0) continue;
    if (v <= m.knots(m.knots.rows() - 1, d)) {
      f += interpolate(m.knots.col(d), m.table.col(d), v);
    } else {
      for (Eigen::Index j = 0; j < m.support.rows(); ++j) {
        f += m.coef[j] * power_mean(v, m.support(j, d), m.params.p);
      }
    }
  }
  return f;
}

}  // namespace

double PmSvmModel::decision(const FeatureVector& x) const {
  if (x.size() != dim()) throw Error(ErrorCode::DimMismatch, "PmSVM expects dim " + std::to_string(dim()));
  return lut_decision(*this, x);
}

double PmSvmModel::decision_exact(const FeatureVector& x) const {
  if (x.size() != dim()) throw Error(ErrorCode::DimMismatch, "PmSVM expects dim " + std::to_string(dim()));
  double f = 0.0;
  for (Eigen::Index j = 0; j < support.rows(); ++j) {
    f += coef[j] * (power_mean_kernel(x, support.row(j).transpose(), params.p) + 1.0);
  }
  return f;
}

PmSvmModel train_pmsvm(const FeatureMatrix& X, const LabelVector& y, const PmSvmParams& params) {
  check_training_data(X, y);
  if (params.p > 0.0 || std::isnan(params.p)) throw Error(ErrorCode::InvalidArgument, "PmSVM needs p <= 0");
  if (!(params.omega > 0.0)) throw Error(ErrorCode::InvalidArgument, "PmSVM omega must be > 0");
  if (params.knots < 4) throw Error(ErrorCode::InvalidArgument, "PmSVM needs at least 4 knots");
  if ((X.array() < 0.0f).any()) throw Error(ErrorCode::NegativeFeature, "PmSVM features must be >= 0");

  const Eigen::Index n = X.rows();
  const Eigen::Index D = X.cols();
  const Eigen::Index m = params.knots;

  PmSvmModel model;
  model.params = params;
  model.C = 1.0 / params.omega;
  model.knots.resize(m, D);
  model.table = Eigen::MatrixXd::Zero(m, D);
  for (Eigen::Index d = 0; d < D; ++d) {
    const double upper = kHeadroom * static_cast<double>(X.col(d).maxCoeff());
    for (Eigen::Index k = 0; k < m; ++k) {
      const double u = static_cast<double>(k) / static_cast<double>(m - 1);
      model.knots(k, d) = upper * u * u;
    }
  }

  const double C = model.C;
  const Eigen::VectorXd yd = y.cast<double>();
  // K(x, x) = sum_d M_p(x_d, x_d) = sum_d x_d, plus the constant bias feature.
  const Eigen::VectorXd qd = X.cast<double>().rowwise().sum().array() + 1.0;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);

    for (Eigen::Index i : order) {
      const double G = yd[i] * lut_decision(model, X.row(i).transpose()) - 1.0;
      double pg = G;
      if (alpha[i] <= 0.0) {
        pg = std::min(G, 0.0);
      } else if (alpha[i] >= C) {
        pg = std::max(G, 0.0);
      }
      if (std::abs(pg) <= 1e-12) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - G / qd[i], 0.0, C);
      const double coef = (alpha[i] - old) * yd[i];
      if (coef == 0.0) continue;
      for (Eigen::Index d = 0; d < D; ++d) {
        accumulate_kernel(model.table.col(d), model.knots.col(d), X(i, d), coef, params.p);
      }
      model.bias += coef;
    }

    // ||w||^2 = sum_i alpha_i y_i f(x_i) in the kernel feature space.
    double ww = 0.0, hinge = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double f = lut_decision(model, X.row(i).transpose());
      ww += alpha[i] * yd[i] * f;
      hinge += std::max(0.0, 1.0 - yd[i] * f);
    }
    model.primal = 0.5 * ww + C * hinge;
    model.dual = alpha.sum() - 0.5 * ww;
    model.epochs = epoch + 1;
    if (model.primal - model.dual <= params.tol * (1.0 + std::abs(model.primal))) break;
  }

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i)
    if (alpha[i] > 0.0) sv.push_back(i);
  model.support.resize(static_cast<Eigen::Index>(sv.size()), D);
  model.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t j = 0; j < sv.size(); ++j) {
    model.support.row(static_cast<Eigen::Index>(j)) = X.row(sv[j]);
    model.coef[static_cast<Eigen::Index>(j)] = alpha[sv[j]] * yd[sv[j]];
  }
  return model;
}

}  // namespace xdface
