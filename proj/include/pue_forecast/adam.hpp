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

#ifndef PUE_FORECAST_ADAM_HPP_
#define PUE_FORECAST_ADAM_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "pue_forecast/error.hpp"
#include "pue_forecast/rnn.hpp"

namespace pue {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update, elementwise. `step` counts from 1.
inline void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                      std::span<double> second_moment, long step, const AdamConfig& config) {
  detail::require(params.size() == grads.size() && params.size() == first_moment.size() &&
                      params.size() == second_moment.size(),
                  "adam_step: size mismatch");
  detail::require(step >= 1, "adam_step: step must be >= 1");
  const double first_correction = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double second_correction = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = config.beta1 * first_moment[i] + (1.0 - config.beta1) * g;
    second_moment[i] = config.beta2 * second_moment[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = first_moment[i] / first_correction;
    const double v_hat = second_moment[i] / second_correction;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

// Adam over every tensor of a model.
class AdamOptimizer {
 public:
  AdamOptimizer(const Model& model, AdamConfig config)
      : config_(config), first_(zeros_like(model)), second_(zeros_like(model)) {}

  void step(Model& params, const Model& grads) {
    ++step_;
    std::vector<std::span<const double>> g;
    Model::visit(grads, [&](const std::string&, std::span<const double> data, Eigen::Index, Eigen::Index) {
      g.push_back(data);
    });
    std::vector<std::span<double>> m, v;
    Model::visit(first_, [&](const std::string&, std::span<double> data, Eigen::Index, Eigen::Index) {
      m.push_back(data);
    });
    Model::visit(second_, [&](const std::string&, std::span<double> data, Eigen::Index, Eigen::Index) {
      v.push_back(data);
    });
    std::size_t i = 0;
    Model::visit(params, [&](const std::string&, std::span<double> data, Eigen::Index, Eigen::Index) {
      adam_step(data, g[i], m[i], v[i], step_, config_);
      ++i;
    });
  }

  long steps() const { return step_; }

 private:
  AdamConfig config_;
  Model first_;
  Model second_;
  long step_ = 0;
};

// Global L2 norm of every gradient entry.
inline double gradient_norm(const Model& grads) {
  double sum = 0.0;
  Model::visit(grads, [&](const std::string&, std::span<const double> data, Eigen::Index, Eigen::Index) {
    for (const double v : data) sum += v * v;
  });
  return std::sqrt(sum);
}

inline void clip_gradient(Model& grads, double max_norm) {
  const double norm = gradient_norm(grads);
  if (!(norm > max_norm)) return;
  const double scale = max_norm / norm;
  Model::visit(grads, [&](const std::string&, std::span<double> data, Eigen::Index, Eigen::Index) {
    for (double& v : data) v *= scale;
  });
}

}  // namespace pue

#endif  // PUE_FORECAST_ADAM_HPP_
