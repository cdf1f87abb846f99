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

// Library walk-through: synthetic telemetry, RFECV on the training rows, then
// a small BiGRU trained on the selected features.

#include <iostream>

#include "pue_forecast/pue_forecast.hpp"

int main() {
  const pue::Dataset ds = pue::generate_synthetic({.n_samples = 1500, .n_informative = 5, .n_noise = 5, .seed = 3});
  auto [train_rows, test_rows] = pue::split_chronological(ds, 0.8);
  const pue::NormalizationParams norm = pue::fit_normalizer(train_rows);

  const pue::RfecvResult selection =
      pue::rfecv_run(pue::normalize(train_rows, norm), {.learning_rate = 0.1, .n_estimators = 50, .max_depth = 3});
  std::cout << "RFECV keeps " << selection.best_count << " features:";
  for (const auto& name : selection.selected_features) std::cout << ' ' << name;
  std::cout << "\n";

  pue::TuneGrid grid;
  grid.layers = {1};
  grid.hidden_dims = {8};
  grid.learning_rates = {0.01};
  pue::TrainConfig base;
  base.mode = pue::Mode::BiGru;
  base.max_epochs = 300;
  base.eval_every = 50;
  const pue::TuneReport report = pue::grid_search(ds, {selection.selected_features}, grid, base);

  const auto& best = report.records[*report.best_overall];
  std::cout << "BiGRU held-out MSE " << best.metrics.mse << ", MAE " << best.metrics.mae << ", R2 "
            << pue::format_r2(best.metrics) << " at epoch " << best.best_epoch << "\n";
  pue::write_tune_summary(report, std::cout);
  return 0;
}
