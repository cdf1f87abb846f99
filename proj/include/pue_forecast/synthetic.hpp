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

// Synthetic data-center telemetry with a ratio-defined PUE target.

#ifndef PUE_FORECAST_SYNTHETIC_HPP_
#define PUE_FORECAST_SYNTHETIC_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "pue_forecast/dataset.hpp"
#include "pue_forecast/detail/random.hpp"
#include "pue_forecast/error.hpp"

namespace pue {

struct SyntheticSpec {
  std::size_t n_samples = 5000;
  std::size_t n_informative = 8;
  std::size_t n_noise = 24;
  std::uint64_t seed = 1;
};

inline constexpr int kSamplesPerDay = 144;  // 10-minute cadence

inline Timestamp synthetic_epoch() {
  using namespace std::chrono;
  return sys_days{year{2009} / January / 1};
}

// Channel layout: it_power_kw, cooling_power_kw, outdoor_drybulb_c, then
// aux_load_NN_kw for the remaining informative channels, then sensor_NNN noise
// channels.
//
// facility = it + cooling + sum(aux) + 40 kW fixed losses + 0.02 * it * (T - 24)
// PUE      = facility / it
//
// The fixed losses and the temperature-dependent chiller term are not exposed
// as columns, so every informative channel carries information about PUE that
// the others lack. Each channel has a daily cycle plus AR(1) variation and is
// clamped to a range that keeps PUE inside [1.05, 2.0]. Noise channels are
// exponentially smoothed Gaussian random walks drawn independently of the
// informative channels.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  detail::require(spec.n_samples >= 1, "generate: n_samples must be positive");
  detail::require(spec.n_informative >= 3,
                  "generate: need at least 3 informative channels (IT, cooling, outdoor temperature)");

  const std::size_t n_aux = spec.n_informative - 3;
  const std::size_t n_features = spec.n_informative + spec.n_noise;
  const auto n = static_cast<Eigen::Index>(spec.n_samples);

  Dataset ds;
  ds.feature_names = {"it_power_kw", "cooling_power_kw", "outdoor_drybulb_c"};
  char name[48];
  for (std::size_t j = 0; j < n_aux; ++j) {
    std::snprintf(name, sizeof(name), "aux_load_%02zu_kw", j + 1);
    ds.feature_names.emplace_back(name);
  }
  for (std::size_t j = 0; j < spec.n_noise; ++j) {
    std::snprintf(name, sizeof(name), "sensor_%03zu", j + 1);
    ds.feature_names.emplace_back(name);
  }
  ds.X.resize(n, static_cast<Eigen::Index>(n_features));
  ds.y.resize(n);
  ds.timestamps.reserve(spec.n_samples);

  // Informative and noise channels use separate streams so that adding noise
  // channels leaves the informative ones unchanged.
  detail::Rng rng(spec.seed);
  detail::Rng noise_rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);

  const double aux_base = n_aux > 0 ? 80.0 / static_cast<double>(n_aux) : 0.0;
  // Auxiliary loads peak with the afternoon heat, each with a small lag.
  std::vector<double> aux_phase(n_aux), aux_state(n_aux, 0.0);
  for (std::size_t j = 0; j < n_aux; ++j) aux_phase[j] = -2.0 + rng.uniform(-0.5, 0.5);
  std::vector<double> walk(spec.n_noise, 0.0), smooth(spec.n_noise, 0.0);
  std::vector<double> noise_offset(spec.n_noise), noise_scale(spec.n_noise);
  for (std::size_t j = 0; j < spec.n_noise; ++j) {
    noise_offset[j] = noise_rng.uniform(0.0, 100.0);
    noise_scale[j] = noise_rng.uniform(0.5, 5.0);
  }

  double it_state = 0.0, temp_state = 0.0, cool_state = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double phase =
        2.0 * std::numbers::pi * static_cast<double>(t % kSamplesPerDay) / kSamplesPerDay;

    it_state = 0.9 * it_state + 10.0 * rng.normal();
    const double it = std::clamp(400.0 + 40.0 * std::sin(phase + 0.7) + it_state, 280.0, 580.0);

    temp_state = 0.9 * temp_state + 0.35 * rng.normal();
    const double temp = std::clamp(28.0 + 2.5 * std::sin(phase - 2.0) + temp_state, 22.0, 35.0);

    cool_state = 0.85 * cool_state + 0.025 * rng.normal();
    const double cool_ratio = std::clamp(0.22 + 0.012 * (temp - 28.0) + cool_state, 0.10, 0.35);
    const double cooling = it * cool_ratio;

    double aux_total = 0.0;
    for (std::size_t j = 0; j < n_aux; ++j) {
      aux_state[j] = 0.7 * aux_state[j] + 0.2 * aux_base * rng.normal();
      const double aux = std::clamp(
          aux_base * (1.0 + 0.2 * std::sin(phase + aux_phase[j])) + aux_state[j],
          0.0, 2.0 * aux_base);
      ds.X(t, static_cast<Eigen::Index>(3 + j)) = aux;
      aux_total += aux;
    }

    const double facility = it + cooling + aux_total + 40.0 + 0.02 * it * (temp - 24.0);
    ds.X(t, 0) = it;
    ds.X(t, 1) = cooling;
    ds.X(t, 2) = temp;
    ds.y(t) = facility / it;

    for (std::size_t j = 0; j < spec.n_noise; ++j) {
      walk[j] += noise_rng.normal();
      smooth[j] = 0.8 * smooth[j] + 0.2 * walk[j];
      ds.X(t, static_cast<Eigen::Index>(spec.n_informative + j)) =
          noise_offset[j] + noise_scale[j] * smooth[j];
    }
    ds.timestamps.push_back(synthetic_epoch() + std::chrono::minutes{10} * t);
  }
  return ds;
}

}  // namespace pue

#endif  // PUE_FORECAST_SYNTHETIC_HPP_
