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

#ifndef PUE_FORECAST_METRICS_HPP_
#define PUE_FORECAST_METRICS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "pue_forecast/error.hpp"

namespace pue {

struct MetricsReport {
  double mse = 0.0;
  double mae = 0.0;
  // Empty when the truth has zero variance.
  std::optional<double> r2;
  std::size_t n = 0;
};

inline MetricsReport evaluate(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  detail::require(y_true.size() == y_pred.size(), "evaluate: length mismatch");
  detail::require(y_true.size() >= 2, "evaluate: need at least two samples");
  detail::require(y_true.allFinite() && y_pred.allFinite(), "evaluate: non-finite entry");

  const auto n = static_cast<double>(y_true.size());
  const double mean = y_true.sum() / n;
  double sse = 0.0, sae = 0.0, sst = 0.0;
  for (Eigen::Index i = 0; i < y_true.size(); ++i) {
    const double err = y_pred(i) - y_true(i);
    sse += err * err;
    sae += std::abs(err);
    const double dev = y_true(i) - mean;
    sst += dev * dev;
  }
  MetricsReport report;
  report.n = static_cast<std::size_t>(y_true.size());
  report.mse = sse / n;
  report.mae = sae / n;
  if (sst > 0.0) report.r2 = 1.0 - sse / sst;
  return report;
}

inline double mean_squared_error(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  detail::require(y_true.size() == y_pred.size() && y_true.size() > 0, "mse: length mismatch");
  return (y_pred - y_true).squaredNorm() / static_cast<double>(y_true.size());
}

}  // namespace pue

#endif  // PUE_FORECAST_METRICS_HPP_
