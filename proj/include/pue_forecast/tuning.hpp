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

// Hyperparameter grid search over feature sets.

#ifndef PUE_FORECAST_TUNING_HPP_
#define PUE_FORECAST_TUNING_HPP_

#include <cstddef>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "pue_forecast/checkpoint.hpp"
#include "pue_forecast/dataset.hpp"
#include "pue_forecast/detail/parallel.hpp"
#include "pue_forecast/error.hpp"
#include "pue_forecast/metrics.hpp"
#include "pue_forecast/training.hpp"

namespace pue {

struct TuneGrid {
  std::vector<std::size_t> layers{1, 2, 3};
  std::vector<std::size_t> hidden_dims{10, 25, 50, 75, 100};
  std::vector<double> learning_rates{0.001, 0.005, 0.01, 0.05, 0.1};

  // Every (layers, hidden, lr) combination applied to `base`.
  std::vector<TrainConfig> expand(const TrainConfig& base) const {
    std::vector<TrainConfig> out;
    for (const auto l : layers) {
      for (const auto h : hidden_dims) {
        for (const auto lr : learning_rates) {
          TrainConfig c = base;
          c.layers = l;
          c.hidden_dim = h;
          c.learning_rate = lr;
          out.push_back(c);
        }
      }
    }
    return out;
  }
};

struct TuneRecord;

struct TuneOptions {
  double train_fraction = 0.8;
  bool fit_on_all = false;  // fit the normalizer on every row, not just training rows
  std::size_t workers = 1;
  // Called from worker threads as each grid point finishes.
  std::function<void(const TuneRecord&)> on_record;
};

struct TuneRecord {
  std::size_t feature_set = 0;
  std::vector<std::string> features;
  TrainConfig config;
  bool failed = false;
  std::string failure;
  double last_finite_loss = std::numeric_limits<double>::quiet_NaN();
  int best_epoch = 0;
  MetricsReport metrics;  // held-out, at best_epoch
  std::size_t parameter_count = 0;
  std::vector<EvalRecord> evaluations;
};

struct TuneReport {
  Mode mode = Mode::BiGru;
  std::vector<TuneRecord> records;  // feature-set major, then grid order
  std::vector<std::optional<std::size_t>> best_per_set;  // index into records
  std::optional<std::size_t> best_overall;
  std::vector<std::optional<Checkpoint>> best_checkpoints;  // per feature set
};

namespace detail {

// Lower MSE wins, then fewer parameters, then earlier grid position.
inline bool better_record(const TuneRecord& a, std::size_t ia, const TuneRecord& b, std::size_t ib) {
  return std::make_tuple(a.metrics.mse, a.parameter_count, ia) < std::make_tuple(b.metrics.mse, b.parameter_count, ib);
}

struct PreparedSet {
  WindowedSet train;
  WindowedSet test;
  NormalizationParams norm;
};

inline PreparedSet prepare_feature_set(const Dataset& ds, const std::vector<std::string>& features,
                                       const TuneOptions& options, std::size_t window_length) {
  const Dataset subset = ds.select(features);
  auto [train_rows, test_rows] = split_chronological(subset, options.train_fraction, window_length + 1);
  PreparedSet out;
  out.norm = fit_normalizer(options.fit_on_all ? subset : train_rows);
  out.train = window(normalize(train_rows, out.norm), window_length);
  out.test = window(normalize(test_rows, out.norm), window_length);
  return out;
}

}  // namespace detail

// Trains every grid point on every feature set. Grid points run concurrently
// on `options.workers` threads; the report depends only on the inputs.
inline TuneReport grid_search(const Dataset& ds, const std::vector<std::vector<std::string>>& feature_sets,
                              const TuneGrid& grid, const TrainConfig& base, const TuneOptions& options = {}) {
  detail::require(!feature_sets.empty(), "grid_search: no feature sets");
  const auto configs = grid.expand(base);
  detail::require(!configs.empty(), "grid_search: empty grid");

  std::vector<detail::PreparedSet> prepared;
  for (const auto& features : feature_sets) {
    detail::require(!features.empty(), "grid_search: empty feature set");
    prepared.push_back(detail::prepare_feature_set(ds, features, options, base.window));
  }

  TuneReport report;
  report.mode = base.mode;
  report.records.resize(feature_sets.size() * configs.size());
  report.best_per_set.resize(feature_sets.size());
  report.best_checkpoints.resize(feature_sets.size());
  std::mutex best_mutex;

  detail::parallel_for(report.records.size(), options.workers, [&](std::size_t index) {
    const std::size_t set = index / configs.size();
    TuneRecord& record = report.records[index];
    record.feature_set = set;
    record.features = feature_sets[set];
    record.config = configs[index % configs.size()];
    const auto& data = prepared[set];
    try {
      TrainResult result = train(data.train, data.test, record.config, data.norm, record.features);
      record.best_epoch = result.checkpoint.best_epoch;
      record.metrics = result.checkpoint.metrics;
      record.parameter_count = result.checkpoint.model.parameter_count();
      record.evaluations = std::move(result.evaluations);
      record.last_finite_loss = result.loss_history.back();

      const std::lock_guard lock(best_mutex);
      auto& best = report.best_per_set[set];
      if (!best || detail::better_record(record, index, report.records[*best], *best)) {
        best = index;
        report.best_checkpoints[set] = std::move(result.checkpoint);
      }
    } catch (const DivergenceError& e) {
      record.failed = true;
      record.failure = e.what();
      record.last_finite_loss = e.last_finite_loss();
      record.best_epoch = e.epoch();
    }
    if (options.on_record) options.on_record(record);
  });

  for (const auto& best : report.best_per_set) {
    if (!best) continue;
    if (!report.best_overall || detail::better_record(report.records[*best], *best, report.records[*report.best_overall],
                                                      *report.best_overall)) {
      report.best_overall = best;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Export

inline std::string format_r2(const MetricsReport& m) { return m.r2 ? format_double(*m.r2) : "nan"; }

// One row per feature set: the winning configuration and its held-out metrics.
// A set whose every configuration failed keeps its row with empty fields, so
// rows of two reports over the same sets line up.
inline void write_tune_summary(const TuneReport& report, std::ostream& out) {
  out << "selected_features,layers,hidden,lr,epochs,MSE,MAE,R2\n";
  const std::size_t per_set = report.best_per_set.empty() ? 0 : report.records.size() / report.best_per_set.size();
  for (std::size_t set = 0; set < report.best_per_set.size(); ++set) {
    const auto& best = report.best_per_set[set];
    if (!best) {
      out << report.records[set * per_set].features.size() << ",,,,,,,\n";
      continue;
    }
    const auto& r = report.records[*best];
    out << r.features.size() << ',' << r.config.layers << ',' << r.config.hidden_dim << ','
        << format_double(r.config.learning_rate) << ',' << r.best_epoch << ',' << format_double(r.metrics.mse) << ','
        << format_double(r.metrics.mae) << ',' << format_r2(r.metrics) << '\n';
  }
}

// Every grid point, including failed ones.
inline void write_tune_records(const TuneReport& report, std::ostream& out) {
  out << "feature_set,selected_features,mode,layers,hidden,lr,epochs,MSE,MAE,R2,status,message\n";
  for (const auto& r : report.records) {
    out << r.feature_set << ',' << r.features.size() << ',' << to_string(r.config.mode) << ',' << r.config.layers
        << ',' << r.config.hidden_dim << ',' << format_double(r.config.learning_rate) << ',' << r.best_epoch << ',';
    if (r.failed) {
      std::string message = r.failure;
      for (auto& c : message) {
        if (c == ',' || c == '\n') c = ' ';
      }
      out << ",,,failed," << message << " (last finite loss " << format_double(r.last_finite_loss) << ")\n";
    } else {
      out << format_double(r.metrics.mse) << ',' << format_double(r.metrics.mae) << ',' << format_r2(r.metrics)
          << ",ok,\n";
    }
  }
}

// Held-out metrics at every evaluation epoch of every grid point.
inline void write_tune_history(const TuneReport& report, std::ostream& out) {
  out << "feature_set,layers,hidden,lr,epoch,train_loss,MSE,MAE,R2,checkpointed\n";
  for (const auto& r : report.records) {
    for (const auto& e : r.evaluations) {
      out << r.feature_set << ',' << r.config.layers << ',' << r.config.hidden_dim << ','
          << format_double(r.config.learning_rate) << ',' << e.epoch << ',' << format_double(e.train_loss) << ','
          << format_double(e.metrics.mse) << ',' << format_double(e.metrics.mae) << ',' << format_r2(e.metrics) << ','
          << (e.checkpointed ? 1 : 0) << '\n';
    }
  }
}

}  // namespace pue

#endif  // PUE_FORECAST_TUNING_HPP_
