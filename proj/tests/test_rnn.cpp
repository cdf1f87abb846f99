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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pue_forecast/rnn.hpp"
#include "support.hpp"

namespace pue {
namespace {

using testing::random_model;
using testing::random_windows;

// Two-unit cell with one input; expected values were computed independently
// at 40 significant digits.
GruParams hand_cell() {
  GruParams p = GruParams::zeros(1, 2);
  p.w_reset << 0.1, -0.2, 0.3, 0.4;
  p.u_reset << 0.5, -0.6;
  p.b_reset << 0.05, -0.05;
  p.w_update << -0.3, 0.2, 0.1, -0.1;
  p.u_update << 0.7, 0.2;
  p.b_update << 0.1, 0.0;
  p.w_candidate << 0.2, 0.1, -0.4, 0.3;
  p.u_candidate << -0.5, 0.8;
  p.b_candidate << 0.0, 0.02;
  return p;
}

Eigen::MatrixXd column(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (const double x : v) m(i++, 0) = x;
  return m;
}

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (auto& v : m.reshaped()) v = u(gen);
  return m;
}

GruParams random_params(std::mt19937_64& gen, Eigen::Index in, Eigen::Index hidden, double scale) {
  GruParams p = GruParams::zeros(static_cast<std::size_t>(in), static_cast<std::size_t>(hidden));
  GruParams::visit(p, "", [&](const std::string&, std::span<double> data, Eigen::Index, Eigen::Index) {
    std::uniform_real_distribution<double> u(-scale, scale);
    for (double& v : data) v = u(gen);
  });
  return p;
}

TEST(GruCell, HandTrace) {
  const GruParams p = hand_cell();
  const GruStep s = gru_cell(p, column({0.5, -0.3}), column({0.9}));
  const double tol = 1e-12;
  EXPECT_NEAR(s.reset(0, 0), 0.64794080208065023494, tol);
  EXPECT_NEAR(s.reset(1, 0), 0.36354745971843365709, tol);
  EXPECT_NEAR(s.update(0, 0), 0.62714776631319557867, tol);
  EXPECT_NEAR(s.update(1, 0), 0.56463629180302916664, tol);
  EXPECT_NEAR(s.candidate(0, 0), -0.3766176286718490214, tol);
  EXPECT_NEAR(s.candidate(1, 0), 0.52098631810005322234, tol);
  EXPECT_NEAR(s.h(0, 0), -0.049768787732320426343, tol);
  EXPECT_NEAR(s.h(1, 0), 0.16355867027303617721, tol);

  const GruStep next = gru_cell(p, s.h, column({-0.4}));
  EXPECT_NEAR(next.h(0, 0), 0.067720109619029663058, tol);
  EXPECT_NEAR(next.h(1, 0), -0.036347964147619783513, tol);
}

TEST(GruCell, ZeroWeightsHalveState) {
  const GruParams p = GruParams::zeros(3, 4);
  const Eigen::MatrixXd h = column({0.8, -0.2, 0.0, 3.0});
  const GruStep s = gru_cell(p, h, column({1.0, -5.0, 2.0}));
  EXPECT_EQ(s.reset, Eigen::MatrixXd::Constant(4, 1, 0.5));
  EXPECT_EQ(s.update, Eigen::MatrixXd::Constant(4, 1, 0.5));
  EXPECT_EQ(s.candidate, Eigen::MatrixXd::Zero(4, 1));
  EXPECT_EQ(s.h, 0.5 * h);
}

TEST(GruCell, SaturatedUpdateSelectsCandidate) {
  GruParams p = GruParams::zeros(1, 2);
  p.b_update.setConstant(40.0);
  p.u_candidate << 0.7, -1.1;
  p.b_candidate << 0.1, 0.2;
  const GruStep s = gru_cell(p, column({0.9, -0.6}), column({0.5}));
  EXPECT_NEAR(s.h(0, 0), s.candidate(0, 0), 1e-6);
  EXPECT_NEAR(s.h(1, 0), s.candidate(1, 0), 1e-6);
}

TEST(GruCell, DimensionMismatch) {
  const GruParams p = hand_cell();
  EXPECT_THROW(gru_cell(p, column({0.0, 0.0, 0.0}), column({1.0})), InvalidArgument);
  EXPECT_THROW(gru_cell(p, column({0.0, 0.0}), column({1.0, 2.0})), InvalidArgument);
}

TEST(GruCell, GateRangesAndContraction) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 200; ++trial) {
    const GruParams p = random_params(gen, 3, 5, 2.0);
    const Eigen::MatrixXd h = random_matrix(gen, 5, 8, 1.0);
    const GruStep s = gru_cell(p, h, random_matrix(gen, 3, 8, 3.0));
    EXPECT_GT(s.reset.minCoeff(), 0.0);
    EXPECT_LT(s.reset.maxCoeff(), 1.0);
    EXPECT_GT(s.update.minCoeff(), 0.0);
    EXPECT_LT(s.update.maxCoeff(), 1.0);
    EXPECT_GT(s.candidate.minCoeff(), -1.0);
    EXPECT_LT(s.candidate.maxCoeff(), 1.0);
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      EXPECT_LE(std::abs(s.h(i)), std::max(std::abs(h(i)), std::abs(s.candidate(i))) + 1e-15);
    }
  }
}

TEST(BiGru, SingleStepDoublesCell) {
  BiGruLayer layer{hand_cell(), hand_cell()};
  Eigen::MatrixXd seq(1, 1);
  seq << 0.9;
  const Eigen::MatrixXd out = bigru_forward(layer, seq);
  const GruStep s = gru_cell(hand_cell(), Eigen::MatrixXd::Zero(2, 1), column({0.9}));
  EXPECT_EQ(out(0, 0), 2.0 * s.h(0, 0));
  EXPECT_EQ(out(0, 1), 2.0 * s.h(1, 0));
}

TEST(BiGru, SumDecomposition) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const BiGruLayer layer{random_params(gen, 3, 4, 1.0), random_params(gen, 3, 4, 1.0)};
    const Eigen::MatrixXd seq = random_matrix(gen, 6, 3, 1.0);
    const Eigen::MatrixXd out = bigru_forward(layer, seq);
    const Sequence inputs = to_sequence(seq);
    const ScanCache fwd = gru_scan(layer.forward, inputs, false);
    const ScanCache bwd = gru_scan(layer.backward, inputs, true);
    for (std::size_t t = 0; t < 6; ++t) {
      const auto row = static_cast<Eigen::Index>(t);
      const Eigen::RowVectorXd f = fwd.output_at(t).transpose(), b = bwd.output_at(t).transpose();
      EXPECT_EQ(out.row(row), f + b);
      EXPECT_LE((out.row(row) - f - b).cwiseAbs().maxCoeff(), 1e-15);
    }
  }
}

TEST(BiGru, ReversalSymmetry) {
  std::mt19937_64 gen(6);
  const BiGruLayer layer{random_params(gen, 2, 3, 1.0), random_params(gen, 2, 3, 1.0)};
  const BiGruLayer swapped{layer.backward, layer.forward};
  const Eigen::MatrixXd seq = random_matrix(gen, 5, 2, 1.0);
  const Eigen::MatrixXd reversed = seq.colwise().reverse();
  const Eigen::MatrixXd a = bigru_forward(layer, seq), b = bigru_forward(swapped, reversed);
  EXPECT_LE((a - b.colwise().reverse()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BiGru, DimensionErrors) {
  const BiGruLayer layer{hand_cell(), hand_cell()};
  EXPECT_THROW(bigru_forward(layer, Eigen::MatrixXd::Zero(3, 2)), InvalidArgument);
  EXPECT_THROW(bigru_forward(BiGruLayer{hand_cell(), GruParams{}}, Eigen::MatrixXd::Zero(3, 1)), InvalidArgument);
}

TEST(ModelForward, ZeroHeadReturnsBias) {
  Model m = random_model({Mode::BiGru, 2, 3, 2}, 1);
  m.head.weights.setZero();
  m.head.bias = 0.37;
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 5; ++trial) EXPECT_EQ(predict_window(m, random_matrix(gen, 4, 2, 5.0)), 0.37);
}

TEST(ModelForward, SingleStepGruIsCellPlusHead) {
  const Model m = random_model({Mode::Gru, 3, 4, 1}, 3);
  Eigen::MatrixXd window(1, 3);
  window << 0.2, -0.7, 0.4;
  const GruStep s = gru_cell(m.layers[0].forward, Eigen::MatrixXd::Zero(4, 1), window.transpose());
  EXPECT_NEAR(predict_window(m, window), m.head.bias + m.head.weights.dot(s.h.col(0)), 1e-15);
}

TEST(ModelForward, MatchesStraightLineReference) {
  for (const Mode mode : {Mode::BiGru, Mode::Gru}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Model m = random_model({mode, 2, 3, 2}, seed);
      const WindowedSet ws = random_windows(7, 4, 2, seed + 100);
      const Eigen::VectorXd p = predict(m, ws);
      for (std::size_t k = 0; k < ws.size(); ++k) {
        EXPECT_NEAR(p(static_cast<Eigen::Index>(k)), testing::ref_predict(m, testing::window_rows(ws, k)), 1e-10);
      }
    }
  }
}

TEST(ModelForward, DimensionMismatch) {
  const Model m = random_model({Mode::BiGru, 2, 3, 1}, 4);
  EXPECT_THROW(predict_window(m, Eigen::MatrixXd::Zero(4, 3)), InvalidArgument);
}

TEST(ModelForward, BatchInvariant) {
  const Model m = random_model({Mode::BiGru, 5, 11, 2}, 8, 0.5);
  const WindowedSet ws = random_windows(kBatchChunk + 37, 6, 5, 9);
  const Eigen::VectorXd batched = predict(m, ws);
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const Eigen::MatrixXd w = ws.window(k);
    ASSERT_EQ(batched(static_cast<Eigen::Index>(k)), predict_window(m, w)) << "window " << k;
  }
  const Eigen::VectorXd tail = predict(m, ws.slice(3, 200));
  EXPECT_EQ(tail, batched.segment(3, 197));
}

TEST(ModelBackward, ZeroUpstreamGivesZeroGradients) {
  const Model m = random_model({Mode::BiGru, 2, 3, 2}, 11);
  const WindowedSet ws = random_windows(5, 4, 2, 12);
  const ForwardCache cache = model_forward(m, to_sequence(ws, 0, ws.size()));
  const Model grad = model_backward(m, cache, Eigen::RowVectorXd::Zero(5));
  Model::visit(grad, [](const std::string& name, std::span<const double> data, Eigen::Index, Eigen::Index) {
    for (const double v : data) EXPECT_EQ(v, 0.0) << name;
  });
}

TEST(ModelBackward, OutputBiasGradient) {
  const Model m = random_model({Mode::BiGru, 2, 3, 1}, 13);
  const WindowedSet ws = random_windows(1, 4, 2, 14);
  Model grad;
  mse_loss_and_gradient(m, ws, grad);
  EXPECT_NEAR(grad.head.bias, 2.0 * (predict(m, ws)(0) - ws.targets(0)), 1e-14);
}

TEST(ModelBackward, CacheMismatch) {
  const Model m = random_model({Mode::BiGru, 2, 3, 2}, 15);
  const Model other = random_model({Mode::BiGru, 2, 3, 1}, 15);
  const WindowedSet ws = random_windows(3, 4, 2, 16);
  const ForwardCache cache = model_forward(other, to_sequence(ws, 0, 3));
  EXPECT_THROW(model_backward(m, cache, Eigen::RowVectorXd::Zero(3)), InvalidArgument);
  EXPECT_THROW(model_backward(other, cache, Eigen::RowVectorXd::Zero(2)), InvalidArgument);
}

TEST(ModelBackward, FiniteDifferencesTwoLayerBiGru) {
  const Model m = random_model({Mode::BiGru, 2, 3, 2}, 21);
  const auto check = testing::check_gradients(m, random_windows(6, 4, 2, 22));
  EXPECT_EQ(check.parameters, m.parameter_count());
  EXPECT_LT(check.max_relative_error, 1e-4) << check.worst_parameter;
}

TEST(ModelBackward, FiniteDifferencesGru) {
  const Model m = random_model({Mode::Gru, 3, 4, 2}, 23);
  const auto check = testing::check_gradients(m, random_windows(6, 5, 3, 24));
  EXPECT_LT(check.max_relative_error, 1e-4) << check.worst_parameter;
}

TEST(ModelBackward, FiniteDifferencesRandomConfigurations) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 25; ++trial) {
    const ModelDims dims{Mode::BiGru, 1 + gen() % 4, 1 + gen() % 4, 1 + gen() % 2};
    const std::size_t w = 1 + gen() % 5;
    const Model m = random_model(dims, gen());
    const auto check = testing::check_gradients(m, random_windows(3, w, dims.input_dim, gen()));
    EXPECT_LT(check.max_relative_error, 1e-4) << "trial " << trial << ": " << check.worst_parameter;
  }
}

TEST(InitParams, DeterministicAndBounded) {
  const ModelDims dims{Mode::BiGru, 4, 9, 2};
  const Model a = init_params(dims, 5), b = init_params(dims, 5);
  EXPECT_EQ(a.head.weights, b.head.weights);
  EXPECT_EQ(a.layers[1].backward.w_update, b.layers[1].backward.w_update);
  const Model c = init_params(dims, 6);
  EXPECT_NE(a.layers[0].forward.u_reset, c.layers[0].forward.u_reset);

  const double bound = 1.0 / 3.0;
  Model::visit(a, [&](const std::string& name, std::span<const double> data, Eigen::Index, Eigen::Index) {
    const bool bias = name.find(".b_") != std::string::npos || name == "head.bias";
    for (const double v : data) {
      if (bias) {
        EXPECT_EQ(v, 0.0) << name;
      } else {
        EXPECT_LT(std::abs(v), bound) << name;
      }
    }
  });
}

TEST(InitParams, EmpiricalMeanNearZero) {
  const ModelDims dims{Mode::BiGru, 3, 8, 1};
  const double bound = 1.0 / std::sqrt(8.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 1; count < 10000; ++seed) {
    const Model m = init_params(dims, seed);
    Model::visit(m, [&](const std::string& name, std::span<const double> data, Eigen::Index,
                                              Eigen::Index) {
      if (name.find(".b_") != std::string::npos || name == "head.bias") return;
      for (const double v : data) sum += v;
      count += data.size();
    });
  }
  const double sigma = bound / std::sqrt(3.0 * static_cast<double>(count));
  EXPECT_LT(std::abs(sum / static_cast<double>(count)), 3.0 * sigma);
}

TEST(Model, ParameterCount) {
  const auto per_direction = [](std::size_t in, std::size_t h) { return 3 * (h * h + h * in + h); };
  EXPECT_EQ(zeros_model({Mode::Gru, 4, 5, 1}).parameter_count(), per_direction(4, 5) + 6);
  EXPECT_EQ(zeros_model({Mode::BiGru, 4, 5, 2}).parameter_count(),
            2 * per_direction(4, 5) + 2 * per_direction(5, 5) + 6);
  EXPECT_THROW(zeros_model({Mode::Gru, 0, 5, 1}), InvalidArgument);
}

TEST(Model, ModeNames) {
  EXPECT_EQ(parse_mode("gru"), Mode::Gru);
  EXPECT_EQ(parse_mode("bigru"), Mode::BiGru);
  EXPECT_EQ(to_string(Mode::BiGru), "bigru");
  EXPECT_THROW(parse_mode("lstm"), InvalidArgument);
}

}  // namespace
}  // namespace pue
