// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "xdface/classify.hpp"
#include "xdface/parallel.hpp"
#include "xdface/rng.hpp"

namespace xdface {

namespace {

struct Split {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();  // n_l*gini_l + n_r*gini_r
};

double weighted_gini(double pos, double total) {
  if (total <= 0.0) return 0.0;
  const double p = pos / total;
  return total * 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& X, const LabelVector& y, int max_features, int min_split, Rng& rng)
      : X_(X), y_(y), max_features_(max_features), min_split_(min_split), rng_(rng) {}

  DecisionTree build(std::vector<Eigen::Index> samples) {
    DecisionTree tree;
    struct Pending {
      std::int32_t node;
      std::vector<Eigen::Index> samples;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, std::move(samples)});
    while (!stack.empty()) {
      Pending job = std::move(stack.back());
      stack.pop_back();
      TreeNode node;
      for (auto i : job.samples) ++node.counts[y_[i] > 0 ? 1 : 0];
      const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
      Split split;
      if (!pure && static_cast<int>(job.samples.size()) >= min_split_) split = best_split(job.samples, node);
      if (split.feature < 0) {
        tree.nodes[static_cast<std::size_t>(job.node)] = node;
        continue;
      }
      std::vector<Eigen::Index> left, right;
      for (auto i : job.samples) {
        (static_cast<double>(X_(i, split.feature)) <= split.threshold ? left : right).push_back(i);
      }
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = static_cast<std::int32_t>(tree.nodes.size());
      node.right = node.left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[static_cast<std::size_t>(job.node)] = node;
      // Right first so the left subtree is expanded next.
      stack.push_back({node.right, std::move(right)});
      stack.push_back({node.left, std::move(left)});
    }
    return tree;
  }

 private:
  // Visits features in random order until max_features non-constant ones
  // were scored; constant features do not count against the budget.
  Split best_split(const std::vector<Eigen::Index>& samples, const TreeNode& parent) {
    const auto dim = static_cast<std::size_t>(X_.cols());
    std::vector<std::int32_t> features(dim);
    std::iota(features.begin(), features.end(), 0);
    const double total = static_cast<double>(samples.size());
    const double total_pos = parent.counts[1];

    Split best;
    int scored = 0;
    std::vector<std::pair<float, int>> column(samples.size());
    for (std::size_t f = 0; f < dim && scored < max_features_; ++f) {
      std::swap(features[f], features[f + uniform_index(rng_, dim - f)]);
      const std::int32_t feat = features[f];
      for (std::size_t s = 0; s < samples.size(); ++s) {
        column[s] = {X_(samples[s], feat), y_[samples[s]] > 0 ? 1 : 0};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++scored;
      double left_n = 0.0, left_pos = 0.0;
      for (std::size_t s = 0; s + 1 < column.size(); ++s) {
        left_n += 1.0;
        left_pos += column[s].second;
        if (column[s].first == column[s + 1].first) continue;
        const double impurity =
            weighted_gini(left_pos, left_n) + weighted_gini(total_pos - left_pos, total - left_n);
        if (impurity < best.impurity) {
          best.impurity = impurity;
          best.feature = feat;
          best.threshold = 0.5 * (static_cast<double>(column[s].first) + static_cast<double>(column[s + 1].first));
        }
      }
    }
    return best;
  }

  const FeatureMatrix& X_;
  const LabelVector& y_;
  int max_features_;
  int min_split_;
  Rng& rng_;
};

}  // namespace

int DecisionTree::vote(const FeatureVector& x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(static_cast<double>(x[n.feature]) <= n.threshold ? n.left : n.right);
  }
  return nodes[i].counts[1] > nodes[i].counts[0] ? 1 : -1;
}

int DecisionTree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

double ForestModel::genuine_fraction(const FeatureVector& x) const {
  if (x.size() != dim) throw Error(ErrorCode::DimMismatch, "forest expects dim " + std::to_string(dim));
  int genuine = 0;
  for (const auto& t : trees) genuine += t.vote(x) > 0 ? 1 : 0;
  return static_cast<double>(genuine) / static_cast<double>(trees.size());
}

ForestModel train_rf(const FeatureMatrix& X, const LabelVector& y, const ForestParams& params) {
  check_training_data(X, y);
  if (params.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  if (params.min_samples_split < 2) throw Error(ErrorCode::InvalidArgument, "min_samples_split must be >= 2");
  ForestModel model;
  model.params = params;
  model.dim = static_cast<int>(X.cols());
  if (model.params.max_features <= 0) {
    model.params.max_features = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(X.cols())))));
  }
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  const auto n = static_cast<std::uint64_t>(X.rows());

  parallel_for(model.trees.size(), params.jobs, [&](std::size_t t) {
    Rng rng = make_rng(params.seed, static_cast<std::uint64_t>(t));
    std::vector<Eigen::Index> bootstrap(n);
    for (auto& s : bootstrap) s = static_cast<Eigen::Index>(uniform_index(rng, n));
    TreeBuilder builder(X, y, model.params.max_features, params.min_samples_split, rng);
    model.trees[t] = builder.build(std::move(bootstrap));
  });
  return model;
}

int VotingForestModel::majority(const FeatureVector& x) const {
  int balance = 0;
  for (const auto& f : forests) balance += f.genuine_fraction(x) > 0.5 ? 1 : -1;
  return balance > 0 ? 1 : -1;
}

double VotingForestModel::genuine_fraction(const FeatureVector& x) const {
  double sum = 0.0;
  for (const auto& f : forests) sum += f.genuine_fraction(x);
  return sum / static_cast<double>(forests.size());
}

VotingForestModel train_voting_rf(const FeatureMatrix& X, const LabelVector& y,
                                  const std::array<std::uint64_t, kVotingForests>& seeds,
                                  const ForestParams& base) {
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw Error(ErrorCode::SeedCollision, "voting forest seeds must be distinct");
  }
  check_training_data(X, y);
  VotingForestModel model;
  for (auto seed : seeds) {
    ForestParams p = base;
    p.seed = seed;
    model.forests.push_back(train_rf(X, y, p));
  }
  return model;
}

}  // namespace xdface
