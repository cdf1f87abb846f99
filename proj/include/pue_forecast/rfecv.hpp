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

// Recursive feature elimination with k-fold cross-validation, scored by MSE,
// using the gradient-boosted trees as the importance estimator.

#ifndef PUE_FORECAST_RFECV_HPP_
#define PUE_FORECAST_RFECV_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pue_forecast/dataset.hpp"
#include "pue_forecast/detail/parallel.hpp"
#include "pue_forecast/error.hpp"
#include "pue_forecast/gbt.hpp"
#include "pue_forecast/metrics.hpp"

namespace pue {

struct EstimatorConfig {
  double learning_rate = 0.1;
  int n_estimators = 100;
  int max_depth = 6;
  double lambda = 1.0;

  auto key() const { return std::tie(learning_rate, n_estimators, max_depth, lambda); }
  bool operator==(const EstimatorConfig& other) const { return key() == other.key(); }
};

struct RfecvOptions {
  int step = 1;
  int folds = 5;
  std::uint64_t seed = 0;
  // Concurrent fold fits inside one run.
  std::size_t workers = 1;
};

struct RfecvResult {
  EstimatorConfig config;
  std::vector<std::string> feature_names;      // all candidate features
  std::vector<std::size_t> elimination_order;  // first eliminated first
  std::map<std::size_t, double> cv_mse_by_count;
  std::size_t best_count = 0;
  double best_mse = 0.0;
  std::vector<std::string> selected_features;  // survivors at best_count, original order

  // Survivors when `count` features remain.
  std::vector<std::string> survivors(std::size_t count) const {
    detail::require(count >= 1 && count <= feature_names.size(), "rfecv: count out of range");
    std::vector<char> removed(feature_names.size(), 0);
    for (std::size_t i = 0; i < feature_names.size() - count; ++i) removed[elimination_order[i]] = 1;
    std::vector<std::string> out;
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
      if (!removed[j]) out.push_back(feature_names[j]);
    }
    return out;
  }
};

// Contiguous chronological folds: [begin, end) per fold, sizes differing by at
// most one.
inline std::vector<std::pair<std::size_t, std::size_t>> contiguous_folds(std::size_t n, int folds) {
  detail::require(folds >= 2, "rfecv: need at least 2 folds");
  const auto k = static_cast<std::size_t>(folds);
  if (k > n) {
    throw InvalidArgument("rfecv: cannot build " + std::to_string(k) + " folds from " +
                          std::to_string(n) + " samples");
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t f = 0; f < k; ++f) out.emplace_back(f * n / k, (f + 1) * n / k);
  return out;
}

namespace detail {

inline Eigen::MatrixXd take_columns(const Eigen::MatrixXd& X, const std::vector<std::size_t>& columns) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(columns[j]));
  }
  return out;
}

inline Eigen::MatrixXd drop_rows(const Eigen::MatrixXd& X, std::size_t begin, std::size_t end) {
  const auto b = static_cast<Eigen::Index>(begin), e = static_cast<Eigen::Index>(end);
  Eigen::MatrixXd out(X.rows() - (e - b), X.cols());
  out.topRows(b) = X.topRows(b);
  out.bottomRows(X.rows() - e) = X.bottomRows(X.rows() - e);
  return out;
}

inline Eigen::VectorXd drop_rows(const Eigen::VectorXd& y, std::size_t begin, std::size_t end) {
  const auto b = static_cast<Eigen::Index>(begin), e = static_cast<Eigen::Index>(end);
  Eigen::VectorXd out(y.size() - (e - b));
  out.head(b) = y.head(b);
  out.tail(y.size() - e) = y.tail(y.size() - e);
  return out;
}

inline GbtParams to_gbt_params(const EstimatorConfig& config, std::uint64_t seed) {
  return GbtParams{config.n_estimators, config.learning_rate, config.max_depth, config.lambda, seed};
}

}  // namespace detail

// Mean held-out MSE of the estimator over contiguous folds.
inline double cross_validated_mse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const EstimatorConfig& config, const RfecvOptions& options) {
  const auto folds = contiguous_folds(static_cast<std::size_t>(X.rows()), options.folds);
  std::vector<double> scores(folds.size());
  detail::parallel_for(folds.size(), options.workers, [&](std::size_t f) {
    const auto [begin, end] = folds[f];
    const auto b = static_cast<Eigen::Index>(begin), len = static_cast<Eigen::Index>(end - begin);
    const GbtModel model =
        gbt_fit(detail::drop_rows(X, begin, end), detail::drop_rows(y, begin, end),
                detail::to_gbt_params(config, options.seed));
    scores[f] = mean_squared_error(y.segment(b, len), gbt_predict(model, X.middleRows(b, len)));
  });
  double sum = 0.0;
  for (const double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

inline RfecvResult rfecv_run(const Dataset& ds, const EstimatorConfig& config,
                             const RfecvOptions& options = {}) {
  const std::size_t n_features = ds.n_features();
  detail::require(n_features >= 2, "rfecv: need at least 2 features");
  detail::require(options.step >= 1, "rfecv: step must be positive");
  const auto folds = contiguous_folds(ds.n_samples(), options.folds);
  std::size_t largest_fold = 0;
  for (const auto& [b, e] : folds) largest_fold = std::max(largest_fold, e - b);
  if (ds.n_samples() - largest_fold < 2) {
    throw InvalidArgument("rfecv: training folds would hold fewer than 2 samples");
  }

  RfecvResult result;
  result.config = config;
  result.feature_names = ds.feature_names;

  std::vector<std::size_t> current(n_features);
  std::iota(current.begin(), current.end(), std::size_t{0});
  while (true) {
    const Eigen::MatrixXd X = detail::take_columns(ds.X, current);
    try {
      result.cv_mse_by_count[current.size()] = cross_validated_mse(X, ds.y, config, options);
      if (current.size() == 1) break;

      const GbtModel full = gbt_fit(X, ds.y, detail::to_gbt_params(config, options.seed));
      const auto& importance = gbt_importance(full);
      std::vector<std::size_t> rank(current.size());
      std::iota(rank.begin(), rank.end(), std::size_t{0});
      std::stable_sort(rank.begin(), rank.end(),
                       [&](std::size_t a, std::size_t b) { return importance[a] < importance[b]; });
      const std::size_t remove =
          std::min(static_cast<std::size_t>(options.step), current.size() - 1);
      std::vector<char> drop(current.size(), 0);
      for (std::size_t i = 0; i < remove; ++i) {
        drop[rank[i]] = 1;
        result.elimination_order.push_back(current[rank[i]]);
      }
      std::vector<std::size_t> kept;
      for (std::size_t j = 0; j < current.size(); ++j) {
        if (!drop[j]) kept.push_back(current[j]);
      }
      current = std::move(kept);
    } catch (const Error& e) {
      throw Error("rfecv: iteration with " + std::to_string(current.size()) + " features: " + e.what());
    }
  }

  // Lowest MSE; on ties the smaller count wins (map iterates ascending).
  result.best_mse = std::numeric_limits<double>::infinity();
  for (const auto& [count, mse] : result.cv_mse_by_count) {
    if (mse < result.best_mse) {
      result.best_mse = mse;
      result.best_count = count;
    }
  }
  result.selected_features = result.survivors(result.best_count);
  return result;
}

struct RfecvGrid {
  std::vector<double> learning_rates{0.5, 0.75, 0.1, 0.075, 0.05};
  std::vector<int> n_estimators{50, 100, 150, 200, 250};
  std::vector<int> max_depths{3, 6, 9, 12};
  double lambda = 1.0;

  std::vector<EstimatorConfig> expand() const {
    std::vector<EstimatorConfig> out;
    for (const double lr : learning_rates) {
      for (const int n : n_estimators) {
        for (const int depth : max_depths) out.push_back({lr, n, depth, lambda});
      }
    }
    return out;
  }
};

using RfecvProgress = std::function<void(std::size_t index, std::size_t total, const RfecvResult&)>;

// Runs every grid combination and keeps the `top_k` lowest-MSE results with
// distinct feature sets. Combinations run on `grid_workers` threads; the
// ordering is by (MSE, grid position) whatever the completion order.
// `progress` is called from worker threads as each combination finishes.
inline std::vector<RfecvResult> rfecv_grid(const Dataset& ds, const RfecvGrid& grid, std::size_t top_k,
                                           const RfecvOptions& options = {},
                                           std::size_t grid_workers = 1, const RfecvProgress& progress = {}) {
  const auto configs = grid.expand();
  detail::require(!configs.empty(), "rfecv_grid: empty grid");
  detail::require(top_k >= 1, "rfecv_grid: top_k must be positive");
  std::vector<RfecvResult> results(configs.size());
  RfecvOptions inner = options;
  if (grid_workers > 1) inner.workers = 1;
  detail::parallel_for(configs.size(), grid_workers,
                       [&](std::size_t i) {
                         results[i] = rfecv_run(ds, configs[i], inner);
                         if (progress) progress(i, configs.size(), results[i]);
                       });

  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return results[a].best_mse < results[b].best_mse;
  });
  std::vector<RfecvResult> out;
  for (const std::size_t i : order) {
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const RfecvResult& kept) {
      return kept.selected_features == results[i].selected_features;
    });
    if (duplicate) continue;
    out.push_back(std::move(results[i]));
    if (out.size() == top_k) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json to_json(const EstimatorConfig& config) {
  return {{"learning_rate", config.learning_rate},
          {"n_estimators", config.n_estimators},
          {"max_depth", config.max_depth},
          {"lambda", config.lambda}};
}

inline nlohmann::json to_json(const RfecvResult& result) {
  nlohmann::json curve = nlohmann::json::array();
  for (auto it = result.cv_mse_by_count.rbegin(); it != result.cv_mse_by_count.rend(); ++it) {
    curve.push_back({{"count", it->first}, {"mse", it->second}});
  }
  nlohmann::json eliminated = nlohmann::json::array();
  for (const auto index : result.elimination_order) eliminated.push_back(result.feature_names[index]);
  return {{"config", to_json(result.config)},
          {"best_count", result.best_count},
          {"cv_mse", result.best_mse},
          {"selected_features", result.selected_features},
          {"cv_mse_by_count", curve},
          {"elimination_order", eliminated}};
}

inline nlohmann::json to_json(const std::vector<RfecvResult>& results) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : results) list.push_back(to_json(r));
  return {{"results", list}};
}

// Reads the `selected_features` lists back from an exported document.
inline std::vector<std::vector<std::string>> feature_sets_from_json(const nlohmann::json& doc) {
  std::vector<std::vector<std::string>> sets;
  try {
    for (const auto& entry : doc.at("results")) {
      sets.push_back(entry.at("selected_features").get<std::vector<std::string>>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("feature-set document: ") + e.what());
  }
  return sets;
}

// (count, mse) rows per configuration for MSE-versus-feature-count plots.
inline void write_rfecv_curves(const std::vector<RfecvResult>& results, std::ostream& out) {
  out << "rank,learning_rate,n_estimators,max_depth,count,mse\n";
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& c = results[r].config;
    for (auto it = results[r].cv_mse_by_count.rbegin(); it != results[r].cv_mse_by_count.rend(); ++it) {
      out << r + 1 << ',' << format_double(c.learning_rate) << ',' << c.n_estimators << ','
          << c.max_depth << ',' << it->first << ',' << format_double(it->second) << '\n';
    }
  }
}

}  // namespace pue

#endif  // PUE_FORECAST_RFECV_HPP_
