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

// Full-batch Adam training of a recurrent regressor with periodic held-out
// evaluation and best-model checkpointing.

#ifndef PUE_FORECAST_TRAINING_HPP_
#define PUE_FORECAST_TRAINING_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pue_forecast/adam.hpp"
#include "pue_forecast/dataset.hpp"
#include "pue_forecast/error.hpp"
#include "pue_forecast/metrics.hpp"
#include "pue_forecast/rnn.hpp"

namespace pue {

struct TrainConfig {
  Mode mode = Mode::BiGru;
  std::size_t layers = 1;
  std::size_t hidden_dim = 10;
  double learning_rate = 0.01;
  int max_epochs = 4000;
  int eval_every = 500;
  std::uint64_t seed = 1;
  std::size_t window = 6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::optional<double> clip_norm;
  // Select the checkpoint by training loss at every epoch instead of by
  // held-out loss at evaluation epochs.
  bool checkpoint_on_train_loss = false;
  // Report metrics in PUE units instead of normalized units.
  bool pue_units = false;

  void validate() const {
    detail::require(layers >= 1 && hidden_dim >= 1, "train: layers and hidden_dim must be positive");
    detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate), "train: bad learning rate");
    detail::require(max_epochs >= 1 && eval_every >= 1, "train: max_epochs and eval_every must be positive");
    detail::require(window >= 1, "train: window must be positive");
    detail::require(!clip_norm || *clip_norm > 0.0, "train: clip_norm must be positive");
  }
};

struct EvalRecord {
  int epoch = 0;
  double train_loss = 0.0;  // training MSE computed during this epoch
  MetricsReport metrics;    // held-out, after this epoch's update
  bool checkpointed = false;
};

struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  TrainConfig config;
  Model model;
  NormalizationParams normalization;
  std::vector<std::string> features;
  int best_epoch = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  MetricsReport metrics;  // held-out metrics of `model`
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> loss_history;  // training MSE per epoch
  std::vector<EvalRecord> evaluations;
};

// Metrics of a model on a windowed set, optionally mapped to PUE units.
inline MetricsReport evaluate_model(const Model& model, const WindowedSet& ws, const NormalizationParams& norm,
                                    bool pue_units) {
  const Eigen::VectorXd pred = predict(model, ws);
  if (!pue_units) return evaluate(ws.targets, pred);
  return evaluate(denormalize_target(ws.targets, norm), denormalize_target(pred, norm));
}

inline NormalizationParams identity_normalization(std::size_t n_features) {
  NormalizationParams p;
  for (std::size_t j = 0; j < n_features; ++j) p.feature_names.push_back("f" + std::to_string(j));
  p.feature_min = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_features));
  p.feature_max = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_features));
  return p;
}

// Trains for exactly max_epochs full-batch epochs and returns the best
// checkpoint seen, never simply the final weights. Evaluation happens every
// eval_every epochs (and once at the end if no multiple was reached). Throws
// DivergenceError on a non-finite training loss.
inline TrainResult train(const WindowedSet& train_set, const WindowedSet& eval_set, const TrainConfig& cfg,
                         const NormalizationParams& norm, const std::vector<std::string>& features) {
  cfg.validate();
  detail::require(train_set.size() >= 1, "train: empty training set");
  detail::require(eval_set.size() >= 2, "train: evaluation set needs at least 2 windows");
  detail::require(train_set.n_features == eval_set.n_features && train_set.window_length == eval_set.window_length,
                  "train: training and evaluation sets differ in shape");

  Model model = init_params({cfg.mode, train_set.n_features, cfg.hidden_dim, cfg.layers}, cfg.seed);
  AdamOptimizer optimizer(model, {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});

  TrainResult result;
  Checkpoint& best = result.checkpoint;
  best.config = cfg;
  best.normalization = norm;
  best.features = features;
  best.model = model;
  result.loss_history.reserve(static_cast<std::size_t>(cfg.max_epochs));

  Model grad;
  double last_finite = std::numeric_limits<double>::quiet_NaN();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double loss = mse_loss_and_gradient(model, train_set, grad);
    if (!std::isfinite(loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch), epoch, last_finite);
    }
    last_finite = loss;
    result.loss_history.push_back(loss);

    if (cfg.checkpoint_on_train_loss && loss < best.best_loss) {
      best.model = model;  // the weights that produced `loss`
      best.best_loss = loss;
      best.best_epoch = epoch;
    }

    if (cfg.clip_norm) clip_gradient(grad, *cfg.clip_norm);
    optimizer.step(model, grad);

    const bool last_epoch = epoch == cfg.max_epochs;
    if (epoch % cfg.eval_every == 0 || (last_epoch && result.evaluations.empty())) {
      EvalRecord record;
      record.epoch = epoch;
      record.train_loss = loss;
      const Eigen::VectorXd pred = predict(model, eval_set);
      if (!pred.allFinite()) {
        throw DivergenceError("non-finite prediction at epoch " + std::to_string(epoch), epoch, last_finite);
      }
      const double eval_loss = mean_squared_error(eval_set.targets, pred);
      record.metrics = evaluate_model(model, eval_set, norm, cfg.pue_units);
      if (!cfg.checkpoint_on_train_loss && eval_loss < best.best_loss) {
        best.model = model;
        best.best_loss = eval_loss;
        best.best_epoch = epoch;
        record.checkpointed = true;
      }
      result.evaluations.push_back(record);
    }
  }
  if (best.best_epoch == 0) {
    throw DivergenceError("no finite evaluation loss", cfg.max_epochs, last_finite);
  }
  best.metrics = evaluate_model(best.model, eval_set, norm, cfg.pue_units);
  return result;
}

inline TrainResult train(const WindowedSet& train_set, const WindowedSet& eval_set, const TrainConfig& cfg) {
  const NormalizationParams norm = identity_normalization(train_set.n_features);
  return train(train_set, eval_set, cfg, norm, norm.feature_names);
}

}  // namespace pue

#endif  // PUE_FORECAST_TRAINING_HPP_
