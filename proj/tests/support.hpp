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

// Helpers shared by the unit tests and the acceptance runner: random models,
// a straight-line reference forward pass and a finite-difference gradient
// check.

#ifndef PUE_FORECAST_TESTS_SUPPORT_HPP_
#define PUE_FORECAST_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pue_forecast/pue_forecast.hpp"

namespace pue::testing {

// Every parameter, biases included, uniform on (-scale, scale).
inline Model random_model(const ModelDims& dims, std::uint64_t seed, double scale = 0.8) {
  Model m = zeros_model(dims);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Model::visit(m, [&](const std::string&, std::span<double> data, Eigen::Index, Eigen::Index) {
    for (double& v : data) v = u(gen);
  });
  return m;
}

inline WindowedSet random_windows(std::size_t count, std::size_t length, std::size_t features, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  WindowedSet ws;
  ws.window_length = length;
  ws.n_features = features;
  ws.values.resize(count * length * features);
  for (double& v : ws.values) v = u(gen);
  ws.targets.resize(static_cast<Eigen::Index>(count));
  for (Eigen::Index k = 0; k < ws.targets.size(); ++k) ws.targets(k) = u(gen);
  return ws;
}

// ---------------------------------------------------------------------------
// Reference forward pass: one window, scalar loops, no shared code with the
// library kernels. Runs in long double so finite differences of it carry less
// rounding than the double kernels they check.

using Real = long double;
using Vec = std::vector<Real>;

inline Real ref_sigmoid(Real a) { return 1.0L / (1.0L + std::exp(-a)); }

inline Vec ref_cell(const GruParams& p, const Vec& h, const Vec& x) {
  const auto hidden = static_cast<std::size_t>(p.w_reset.rows());
  const auto input = static_cast<std::size_t>(p.u_reset.cols());
  Vec r(hidden), z(hidden), c(hidden), out(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    Real ar = p.b_reset(i), az = p.b_update(i);
    for (std::size_t j = 0; j < hidden; ++j) {
      ar += p.w_reset(i, j) * h[j];
      az += p.w_update(i, j) * h[j];
    }
    for (std::size_t j = 0; j < input; ++j) {
      ar += p.u_reset(i, j) * x[j];
      az += p.u_update(i, j) * x[j];
    }
    r[i] = ref_sigmoid(ar);
    z[i] = ref_sigmoid(az);
  }
  for (std::size_t i = 0; i < hidden; ++i) {
    Real ac = p.b_candidate(i);
    for (std::size_t j = 0; j < hidden; ++j) ac += p.w_candidate(i, j) * r[j] * h[j];
    for (std::size_t j = 0; j < input; ++j) ac += p.u_candidate(i, j) * x[j];
    c[i] = std::tanh(ac);
    out[i] = (1.0L - z[i]) * h[i] + z[i] * c[i];
  }
  return out;
}

// States h_t for t = 0..W-1 of one direction.
inline std::vector<Vec> ref_scan(const GruParams& p, const std::vector<Vec>& xs, bool reversed) {
  const std::size_t steps = xs.size();
  std::vector<Vec> out(steps);
  Vec h(static_cast<std::size_t>(p.w_reset.rows()), 0.0L);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reversed ? steps - 1 - s : s;
    h = ref_cell(p, h, xs[t]);
    out[t] = h;
  }
  return out;
}

inline Real ref_predict(const Model& m, const std::vector<Vec>& window) {
  std::vector<Vec> seq = window;
  for (const auto& layer : m.layers) {
    auto fwd = ref_scan(layer.forward, seq, false);
    if (m.mode == Mode::BiGru) {
      const auto bwd = ref_scan(layer.backward, seq, true);
      for (std::size_t t = 0; t < fwd.size(); ++t) {
        for (std::size_t i = 0; i < fwd[t].size(); ++i) fwd[t][i] += bwd[t][i];
      }
    }
    seq = std::move(fwd);
  }
  Real y = m.head.bias;
  for (std::size_t i = 0; i < seq.back().size(); ++i) y += m.head.weights(static_cast<Eigen::Index>(i)) * seq.back()[i];
  return y;
}

inline std::vector<Vec> window_rows(const WindowedSet& ws, std::size_t k) {
  std::vector<Vec> rows(ws.window_length);
  for (std::size_t t = 0; t < ws.window_length; ++t) rows[t].assign(ws.step(k, t), ws.step(k, t) + ws.n_features);
  return rows;
}

inline Real ref_mse(const Model& m, const WindowedSet& ws) {
  Real sse = 0.0L;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const Real e = ref_predict(m, window_rows(ws, k)) - ws.targets(static_cast<Eigen::Index>(k));
    sse += e * e;
  }
  return sse / static_cast<Real>(ws.size());
}

// ---------------------------------------------------------------------------
// Finite differences

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t parameters = 0;
};

// Entries whose analytic and numeric values are both below this magnitude are
// compared on an absolute scale; their relative error is rounding noise.
inline constexpr double kGradientFloor = 1e-7;

// Central differences of the mean squared error with step `eps` against the
// analytic gradient, parameter by parameter.
inline GradientCheck check_gradients(const Model& model, const WindowedSet& ws, double eps = 1e-5) {
  Model analytic;
  mse_loss_and_gradient(model, ws, analytic);
  std::vector<double> grads;
  Model::visit(analytic, [&](const std::string&, std::span<const double> data, Eigen::Index, Eigen::Index) {
    grads.insert(grads.end(), data.begin(), data.end());
  });

  Model probe = model;
  GradientCheck out;
  std::size_t index = 0;
  Model::visit(probe, [&](const std::string& name, std::span<double> data, Eigen::Index, Eigen::Index) {
    for (std::size_t i = 0; i < data.size(); ++i, ++index) {
      const double saved = data[i];
      const double hi = saved + eps, lo = saved - eps;
      data[i] = hi;
      const Real up = ref_mse(probe, ws);
      data[i] = lo;
      const Real down = ref_mse(probe, ws);
      data[i] = saved;
      // Divide by the step actually taken after rounding the parameter.
      const double numeric = static_cast<double>((up - down) / (static_cast<Real>(hi) - static_cast<Real>(lo)));
      const double a = grads[index];
      const double scale = std::max({std::abs(a), std::abs(numeric), kGradientFloor});
      const double rel = std::abs(a - numeric) / scale;
      if (rel > out.max_relative_error) {
        out.max_relative_error = rel;
        out.worst_parameter = name + "[" + std::to_string(i) + "]";
        out.worst_analytic = a;
        out.worst_numeric = numeric;
      }
    }
  });
  out.parameters = index;
  return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pue_forecast_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace pue::testing

#endif  // PUE_FORECAST_TESTS_SUPPORT_HPP_
