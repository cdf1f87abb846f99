// Copyright 2026 The pue-forecast Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Gradient-boosted regression trees for squared error: level-wise growth,
// exact greedy splits, L2-regularized leaves and gain importances.

#ifndef PUE_FORECAST_GBT_HPP_
#define PUE_FORECAST_GBT_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pue_forecast/error.hpp"

namespace pue {

struct TreeNode {
  static constexpr int kLeaf = -1;

  int feature = kLeaf;
  double threshold = 0.0;  // rows with x <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output before learning-rate shrinkage
  double gain = 0.0;   // loss reduction of this split
  int depth = 0;
  std::size_t count = 0;

  bool is_leaf() const { return feature == kLeaf; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row& row) const {
    int index = 0;
    while (!nodes[static_cast<std::size_t>(index)].is_leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(index)];
      index = row(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(index)].value;
  }

  int depth() const {
    int d = 0;
    for (const auto& node : nodes) d = std::max(d, node.depth);
    return d;
  }
};

struct GbtParams {
  int n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = 6;
  double lambda = 1.0;
  std::uint64_t seed = 0;  // accepted for API symmetry; fitting is deterministic
};

struct GbtModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_score = 0.0;
  double lambda = 1.0;
  int max_depth = 0;
  std::size_t n_features = 0;
  std::vector<double> feature_importance;  // accumulated split gain per feature
  double total_gain = 0.0;
  std::vector<double> training_mse;  // after 0, 1, ..., trees.size() trees
};

namespace detail {

// Node statistics under squared error: G is the residual sum, n the count.
struct SplitCandidate {
  double gain = 0.0;
  int feature = TreeNode::kLeaf;
  double threshold = 0.0;
};

inline RegressionTree grow_tree(const Eigen::MatrixXd& X, const std::vector<double>& residual,
                                const std::vector<std::vector<Eigen::Index>>& sorted_by_feature,
                                int max_depth, double lambda) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto n_features = static_cast<std::size_t>(X.cols());
  RegressionTree tree;
  tree.nodes.push_back(TreeNode{});
  std::vector<int> node_of(n, 0);

  std::vector<double> node_sum{0.0}, node_sq{0.0};
  for (std::size_t i = 0; i < n; ++i) {
    node_sum[0] += residual[i];
    node_sq[0] += residual[i] * residual[i];
  }
  tree.nodes[0].count = n;

  // 1 / (count + lambda) for every possible child size.
  std::vector<double> inverse(n + 1);
  for (std::size_t k = 0; k <= n; ++k) inverse[k] = 1.0 / (static_cast<double>(k) + lambda);

  std::vector<int> frontier{0};
  for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    // Per-node scan state, indexed by node id. Inactive nodes map to slot 0,
    // which is never scanned.
    const std::size_t n_nodes = tree.nodes.size();
    std::vector<SplitCandidate> best(n_nodes + 1);
    std::vector<double> best_children(n_nodes + 1, 0.0), parent_score(n_nodes + 1, 0.0);
    std::vector<std::size_t> node_count(n_nodes + 1, 0);
    bool any_active = false;
    for (const int id : frontier) {
      const auto a = static_cast<std::size_t>(id);
      if (tree.nodes[a].count < 2) continue;
      any_active = true;
      node_count[a + 1] = tree.nodes[a].count;
      parent_score[a + 1] = node_sum[a] * node_sum[a] * inverse[node_count[a + 1]];
      best_children[a + 1] = parent_score[a + 1];
    }
    if (!any_active) break;
    std::vector<std::uint32_t> slot_of_row(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int id = node_of[i];
      if (id >= 0 && node_count[static_cast<std::size_t>(id) + 1] > 0) {
        slot_of_row[i] = static_cast<std::uint32_t>(id + 1);
      }
    }
    std::vector<double> left_sum(n_nodes + 1), last_value(n_nodes + 1);
    std::vector<std::size_t> left_count(n_nodes + 1);

    for (std::size_t f = 0; f < n_features; ++f) {
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      std::fill(left_count.begin(), left_count.end(), 0);
      const double* column = X.col(static_cast<Eigen::Index>(f)).data();
      for (const Eigen::Index row : sorted_by_feature[f]) {
        const std::uint32_t a = slot_of_row[static_cast<std::size_t>(row)];
        if (a == 0) continue;
        const double x = column[row];
        if (left_count[a] > 0 && x > last_value[a]) {
          const double gl = left_sum[a], gr = node_sum[a - 1] - left_sum[a];
          const double children = gl * gl * inverse[left_count[a]] + gr * gr * inverse[node_count[a] - left_count[a]];
          // Strict comparison keeps the lowest feature index, then the lowest
          // threshold, among equal gains.
          if (children > best_children[a]) {
            best_children[a] = children;
            double threshold = 0.5 * (last_value[a] + x);
            if (!(threshold < x)) threshold = last_value[a];
            best[a] = {children - parent_score[a], static_cast<int>(f), threshold};
          }
        }
        left_sum[a] += residual[static_cast<std::size_t>(row)];
        ++left_count[a];
        last_value[a] = x;
      }
    }

    std::vector<int> next;
    for (const int id : frontier) {
      const auto a = static_cast<std::size_t>(id);
      const SplitCandidate split = best[a + 1];
      // Gains at roundoff level relative to the node's residual energy are
      // not splits.
      if (split.feature == TreeNode::kLeaf || !(split.gain > 1e-12 * node_sq[a])) continue;
      const int left_id = static_cast<int>(tree.nodes.size());
      const int right_id = left_id + 1;
      TreeNode child;
      child.depth = depth + 1;
      tree.nodes.push_back(child);
      tree.nodes.push_back(child);
      node_sum.resize(tree.nodes.size(), 0.0);
      node_sq.resize(tree.nodes.size(), 0.0);
      auto& node = tree.nodes[a];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.gain = split.gain;
      node.left = left_id;
      node.right = right_id;
      next.push_back(left_id);
      next.push_back(right_id);
    }
    if (next.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const int id = node_of[i];
      if (id < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(id)];
      if (node.is_leaf()) {
        // Rows in nodes that stopped splitting are final.
        if (node.depth == depth) node_of[i] = -1 - id;
        continue;
      }
      const int child = X(static_cast<Eigen::Index>(i), node.feature) <= node.threshold ? node.left : node.right;
      node_of[i] = child;
      auto& c = tree.nodes[static_cast<std::size_t>(child)];
      ++c.count;
      node_sum[static_cast<std::size_t>(child)] += residual[i];
      node_sq[static_cast<std::size_t>(child)] += residual[i] * residual[i];
    }
    frontier = std::move(next);
  }

  for (std::size_t a = 0; a < tree.nodes.size(); ++a) {
    auto& node = tree.nodes[a];
    if (node.is_leaf()) node.value = node_sum[a] / (static_cast<double>(node.count) + lambda);
  }
  return tree;
}

}  // namespace detail

// Fits an additive ensemble to (X, y). Boosting ends before n_estimators when
// a round finds no split at the root, as every further round would only add a
// constant.
inline GbtModel gbt_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbtParams& params) {
  detail::require(X.rows() == y.size(), "gbt_fit: X rows do not match y length");
  detail::require(X.rows() >= 2, "gbt_fit: need at least two samples");
  detail::require(X.allFinite() && y.allFinite(), "gbt_fit: non-finite input");
  detail::require(params.n_estimators >= 1, "gbt_fit: n_estimators must be positive");
  detail::require(params.learning_rate > 0.0, "gbt_fit: learning_rate must be positive");
  detail::require(params.max_depth >= 1, "gbt_fit: max_depth must be positive");
  detail::require(params.lambda >= 0.0, "gbt_fit: lambda must be non-negative");

  const auto n = static_cast<std::size_t>(X.rows());
  GbtModel model;
  model.learning_rate = params.learning_rate;
  model.lambda = params.lambda;
  model.max_depth = params.max_depth;
  model.n_features = static_cast<std::size_t>(X.cols());
  model.feature_importance.assign(model.n_features, 0.0);
  model.base_score = y.sum() / static_cast<double>(n);

  std::vector<std::vector<Eigen::Index>> sorted(model.n_features);
  for (std::size_t f = 0; f < model.n_features; ++f) {
    auto& order = sorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto col = static_cast<Eigen::Index>(f);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return X(a, col) < X(b, col); });
  }

  std::vector<double> prediction(n, model.base_score), residual(n);
  auto mse = [&] {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = y(static_cast<Eigen::Index>(i)) - prediction[i];
      sse += residual[i] * residual[i];
    }
    return sse / static_cast<double>(n);
  };
  model.training_mse.push_back(mse());

  for (int round = 0; round < params.n_estimators; ++round) {
    RegressionTree tree = detail::grow_tree(X, residual, sorted, params.max_depth, params.lambda);
    if (tree.nodes.size() == 1) break;
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) {
        model.feature_importance[static_cast<std::size_t>(node.feature)] += node.gain;
        model.total_gain += node.gain;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      prediction[i] += params.learning_rate * tree.predict(X.row(static_cast<Eigen::Index>(i)));
    }
    model.trees.push_back(std::move(tree));
    model.training_mse.push_back(mse());
  }
  return model;
}

inline Eigen::VectorXd gbt_predict(const GbtModel& model, const Eigen::MatrixXd& X) {
  if (static_cast<std::size_t>(X.cols()) != model.n_features) {
    throw InvalidArgument("gbt_predict: expected " + std::to_string(model.n_features) +
                          " columns, got " + std::to_string(X.cols()));
  }
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.predict(X.row(i));
    out(i) = model.base_score + model.learning_rate * sum;
  }
  return out;
}

inline const std::vector<double>& gbt_importance(const GbtModel& model) { return model.feature_importance; }

// Indented text dump, one line per node.
inline std::string gbt_dump(const GbtModel& model, const std::vector<std::string>& feature_names = {}) {
  std::ostringstream out;
  out.precision(17);
  out << "base_score=" << model.base_score << " learning_rate=" << model.learning_rate
      << " lambda=" << model.lambda << " trees=" << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out << "tree " << t << '\n';
    const auto& nodes = model.trees[t].nodes;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const auto& node = nodes[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      out << std::string(static_cast<std::size_t>(2 * (node.depth + 1)), ' ');
      if (node.is_leaf()) {
        out << "leaf value=" << node.value << " count=" << node.count << '\n';
        continue;
      }
      const auto f = static_cast<std::size_t>(node.feature);
      out << (f < feature_names.size() ? feature_names[f] : "f" + std::to_string(f))
          << " <= " << node.threshold << " gain=" << node.gain << '\n';
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  return out.str();
}

}  // namespace pue

#endif  // PUE_FORECAST_GBT_HPP_
