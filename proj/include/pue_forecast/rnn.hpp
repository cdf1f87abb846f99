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

// GRU and bidirectional GRU sequence regressors with an affine readout and
// analytic backpropagation through time.
//
// Cell, per timestep:
//   r  = sigmoid(W_r h_prev + U_r x + b_r)            reset gate
//   z  = sigmoid(W_z h_prev + U_z x + b_z)            update gate
//   c  = tanh(W_h (r * h_prev) + U_h x + b_h)         candidate state
//   h  = (1 - z) * h_prev + z * c
// A bidirectional layer runs one cell forward and another backward over the
// window and sums their states elementwise at each timestep. Stacked layers
// consume the full output sequence of the layer below. The prediction is an
// affine map of the top layer's output at the last timestep.
//
// Batches are column-major: one column per window.

#ifndef PUE_FORECAST_RNN_HPP_
#define PUE_FORECAST_RNN_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pue_forecast/dataset.hpp"
#include "pue_forecast/detail/random.hpp"
#include "pue_forecast/error.hpp"

namespace pue {

enum class Mode { Gru, BiGru };

inline std::string_view to_string(Mode mode) { return mode == Mode::Gru ? "gru" : "bigru"; }

inline Mode parse_mode(std::string_view text) {
  if (text == "gru" || text == "GRU") return Mode::Gru;
  if (text == "bigru" || text == "BiGRU" || text == "BIGRU") return Mode::BiGru;
  throw InvalidArgument("unknown mode '" + std::string(text) + "' (expected gru or bigru)");
}

// One timestep per element; each element is [features x batch].
using Sequence = std::vector<Eigen::MatrixXd>;

struct GruParams {
  Eigen::MatrixXd w_reset, w_update, w_candidate;  // hidden x hidden
  Eigen::MatrixXd u_reset, u_update, u_candidate;  // hidden x input
  Eigen::VectorXd b_reset, b_update, b_candidate;  // hidden

  static GruParams zeros(std::size_t input_dim, std::size_t hidden_dim) {
    const auto h = static_cast<Eigen::Index>(hidden_dim), d = static_cast<Eigen::Index>(input_dim);
    GruParams p;
    p.w_reset = p.w_update = p.w_candidate = Eigen::MatrixXd::Zero(h, h);
    p.u_reset = p.u_update = p.u_candidate = Eigen::MatrixXd::Zero(h, d);
    p.b_reset = p.b_update = p.b_candidate = Eigen::VectorXd::Zero(h);
    return p;
  }

  std::size_t input_dim() const { return static_cast<std::size_t>(u_reset.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w_reset.rows()); }
  bool empty() const { return w_reset.size() == 0; }

  // Visits (name, data, rows, cols) in a fixed order.
  template <typename Self, typename Visitor>
  static void visit(Self& p, std::string_view prefix, Visitor&& f) {
    const std::string base(prefix);
    auto go = [&](const char* name, auto& m) { f(base + name, std::span(m.data(), static_cast<std::size_t>(m.size())), m.rows(), m.cols()); };
    go("w_reset", p.w_reset);
    go("w_update", p.w_update);
    go("w_candidate", p.w_candidate);
    go("u_reset", p.u_reset);
    go("u_update", p.u_update);
    go("u_candidate", p.u_candidate);
    go("b_reset", p.b_reset);
    go("b_update", p.b_update);
    go("b_candidate", p.b_candidate);
  }
};

struct BiGruLayer {
  GruParams forward;
  GruParams backward;  // empty in a unidirectional model
};

struct Head {
  Eigen::VectorXd weights;  // hidden
  double bias = 0.0;
};

struct ModelDims {
  Mode mode = Mode::BiGru;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t layers = 1;
};

struct Model {
  Mode mode = Mode::BiGru;
  std::vector<BiGruLayer> layers;
  Head head;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().forward.input_dim(); }
  std::size_t hidden_dim() const { return layers.empty() ? 0 : layers.front().forward.hidden_dim(); }
  ModelDims dims() const { return {mode, input_dim(), hidden_dim(), layers.size()}; }

  template <typename Self, typename Visitor>
  static void visit(Self& m, Visitor&& f) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      const std::string prefix = "layer" + std::to_string(l);
      GruParams::visit(m.layers[l].forward, prefix + ".forward.", f);
      if (m.mode == Mode::BiGru) GruParams::visit(m.layers[l].backward, prefix + ".backward.", f);
    }
    f(std::string("head.weights"), std::span(m.head.weights.data(), static_cast<std::size_t>(m.head.weights.size())),
      m.head.weights.size(), Eigen::Index{1});
    f(std::string("head.bias"), std::span(&m.head.bias, 1), Eigen::Index{1}, Eigen::Index{1});
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    visit(*this, [&](const std::string&, auto data, Eigen::Index, Eigen::Index) { total += data.size(); });
    return total;
  }
};

inline Model zeros_model(const ModelDims& dims) {
  detail::require(dims.input_dim >= 1 && dims.hidden_dim >= 1 && dims.layers >= 1,
                  "model: dimensions must be positive");
  Model m;
  m.mode = dims.mode;
  for (std::size_t l = 0; l < dims.layers; ++l) {
    const std::size_t in = l == 0 ? dims.input_dim : dims.hidden_dim;
    BiGruLayer layer;
    layer.forward = GruParams::zeros(in, dims.hidden_dim);
    if (dims.mode == Mode::BiGru) layer.backward = GruParams::zeros(in, dims.hidden_dim);
    m.layers.push_back(std::move(layer));
  }
  m.head.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims.hidden_dim));
  return m;
}

inline Model zeros_like(const Model& m) { return zeros_model(m.dims()); }

// Weights uniform on (-1/sqrt(hidden), 1/sqrt(hidden)), biases zero.
inline Model init_params(const ModelDims& dims, std::uint64_t seed) {
  Model m = zeros_model(dims);
  detail::Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.hidden_dim));
  Model::visit(m, [&](const std::string& name, std::span<double> data, Eigen::Index, Eigen::Index) {
    const bool is_bias = name.find(".b_") != std::string::npos || name == "head.bias";
    if (is_bias) return;
    for (double& v : data) v = rng.symmetric(bound);
  });
  return m;
}

inline void check_model(const Model& m) {
  detail::require(!m.layers.empty(), "model: no layers");
  const std::size_t hidden = m.hidden_dim();
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const std::size_t in = l == 0 ? m.input_dim() : hidden;
    const auto check = [&](const GruParams& p) {
      detail::require(p.hidden_dim() == hidden && p.input_dim() == in &&
                          p.w_update.rows() == p.w_update.cols() && p.w_candidate.rows() == p.w_candidate.cols() &&
                          p.u_update.cols() == p.u_reset.cols() && p.u_candidate.cols() == p.u_reset.cols() &&
                          p.b_reset.size() == p.w_reset.rows() && p.b_update.size() == p.w_reset.rows() &&
                          p.b_candidate.size() == p.w_reset.rows() && p.w_reset.cols() == p.w_reset.rows(),
                      "model: inconsistent dimensions in layer " + std::to_string(l));
    };
    check(m.layers[l].forward);
    if (m.mode == Mode::BiGru) check(m.layers[l].backward);
  }
  detail::require(static_cast<std::size_t>(m.head.weights.size()) == hidden, "model: head size mismatch");
}

// ---------------------------------------------------------------------------
// Kernels

namespace detail {

// C += A * B where every element is formed as C + (sum over k in ascending
// order, starting from zero). Each output column depends only on the matching
// input column, so a window's result is identical whatever batch it sits in.
// Vector lanes perform the same IEEE operations as the scalar tail; this needs
// floating-point contraction disabled (-ffp-contract=off).
using Lanes4 = double __attribute__((vector_size(32)));

inline Lanes4 load4(const double* p) {
  Lanes4 v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

inline void store4(double* p, Lanes4 v) { std::memcpy(p, &v, sizeof(v)); }

inline void add_product(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Eigen::MatrixXd& C) {
  const Eigen::Index m = A.rows(), depth = A.cols(), n = B.cols();
  const double* a_data = A.data();
  const double* b_data = B.data();
  double* c_data = C.data();
  const Eigen::Index m8 = m - m % 8;
  for (Eigen::Index j = 0; j < n; j += 4) {
    const Eigen::Index cols = std::min<Eigen::Index>(4, n - j);
    if (cols == 4) {
      for (Eigen::Index i = 0; i < m8; i += 8) {
        Lanes4 acc[4][2] = {};
        for (Eigen::Index k = 0; k < depth; ++k) {
          const Lanes4 lo = load4(a_data + k * m + i), hi = load4(a_data + k * m + i + 4);
          for (int c = 0; c < 4; ++c) {
            const double s = b_data[(j + c) * depth + k];
            acc[c][0] += lo * s;
            acc[c][1] += hi * s;
          }
        }
        for (int c = 0; c < 4; ++c) {
          double* out = c_data + (j + c) * m + i;
          store4(out, load4(out) + acc[c][0]);
          store4(out + 4, load4(out + 4) + acc[c][1]);
        }
      }
    } else {
      for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index i = 0; i < m8; i += 8) {
          Lanes4 lo_acc = {}, hi_acc = {};
          for (Eigen::Index k = 0; k < depth; ++k) {
            const double s = b_data[(j + c) * depth + k];
            lo_acc += load4(a_data + k * m + i) * s;
            hi_acc += load4(a_data + k * m + i + 4) * s;
          }
          double* out = c_data + (j + c) * m + i;
          store4(out, load4(out) + lo_acc);
          store4(out + 4, load4(out + 4) + hi_acc);
        }
      }
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index i = m8; i < m; ++i) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < depth; ++k) acc += a_data[k * m + i] * b_data[(j + c) * depth + k];
        c_data[(j + c) * m + i] += acc;
      }
    }
  }
}

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Cell

// States of one cell step for a batch.
struct GruStep {
  Eigen::MatrixXd h;          // new state
  Eigen::MatrixXd reset;      // r
  Eigen::MatrixXd update;     // z
  Eigen::MatrixXd candidate;  // c
};

inline GruStep gru_cell(const GruParams& p, const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& x) {
  const Eigen::Index hidden = p.w_reset.rows(), batch = x.cols();
  if (h_prev.rows() != hidden || x.rows() != p.u_reset.cols() || h_prev.cols() != batch) {
    throw InvalidArgument("gru_cell: dimension mismatch (hidden " + std::to_string(hidden) + ", input " +
                          std::to_string(p.u_reset.cols()) + ")");
  }
  GruStep s;
  s.reset = p.b_reset.replicate(1, batch);
  detail::add_product(p.u_reset, x, s.reset);
  detail::add_product(p.w_reset, h_prev, s.reset);
  s.reset = s.reset.unaryExpr(&detail::sigmoid);

  s.update = p.b_update.replicate(1, batch);
  detail::add_product(p.u_update, x, s.update);
  detail::add_product(p.w_update, h_prev, s.update);
  s.update = s.update.unaryExpr(&detail::sigmoid);

  const Eigen::MatrixXd gated = s.reset.cwiseProduct(h_prev);
  s.candidate = p.b_candidate.replicate(1, batch);
  detail::add_product(p.u_candidate, x, s.candidate);
  detail::add_product(p.w_candidate, gated, s.candidate);
  s.candidate = s.candidate.unaryExpr([](double a) { return std::tanh(a); });

  s.h = ((1.0 - s.update.array()) * h_prev.array() + s.update.array() * s.candidate.array()).matrix();
  return s;
}

// One direction of one layer over a window, in scan order.
struct ScanCache {
  bool reversed = false;
  std::vector<Eigen::MatrixXd> states;  // states[s] is the state before scan step s; size W + 1
  std::vector<Eigen::MatrixXd> reset, update, candidate;

  // Output state at timestep t (not scan step).
  const Eigen::MatrixXd& output_at(std::size_t t) const {
    const std::size_t steps = reset.size();
    return states[(reversed ? steps - 1 - t : t) + 1];
  }
};

inline ScanCache gru_scan(const GruParams& p, const Sequence& inputs, bool reversed) {
  detail::require(!inputs.empty(), "gru_scan: empty sequence");
  const std::size_t steps = inputs.size();
  ScanCache cache;
  cache.reversed = reversed;
  cache.states.reserve(steps + 1);
  cache.states.push_back(Eigen::MatrixXd::Zero(p.w_reset.rows(), inputs.front().cols()));
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reversed ? steps - 1 - s : s;
    GruStep step = gru_cell(p, cache.states.back(), inputs[t]);
    cache.states.push_back(std::move(step.h));
    cache.reset.push_back(std::move(step.reset));
    cache.update.push_back(std::move(step.update));
    cache.candidate.push_back(std::move(step.candidate));
  }
  return cache;
}

struct LayerCache {
  ScanCache forward;
  ScanCache backward;  // unused in a unidirectional model
  Sequence outputs;
};

struct ForwardCache {
  std::vector<Sequence> layer_inputs;  // layer_inputs[l] feeds layer l
  std::vector<LayerCache> layers;
  Eigen::RowVectorXd predictions;
};

inline LayerCache layer_forward(const BiGruLayer& layer, Mode mode, const Sequence& inputs) {
  LayerCache cache;
  cache.forward = gru_scan(layer.forward, inputs, false);
  if (mode == Mode::BiGru) cache.backward = gru_scan(layer.backward, inputs, true);
  cache.outputs.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (mode == Mode::BiGru) {
      cache.outputs.push_back(cache.forward.output_at(t) + cache.backward.output_at(t));
    } else {
      cache.outputs.push_back(cache.forward.output_at(t));
    }
  }
  return cache;
}

// Single sequence [W x input] through one bidirectional layer; row t is the
// summed forward and backward state at timestep t.
inline Eigen::MatrixXd bigru_forward(const BiGruLayer& layer, const Eigen::MatrixXd& sequence) {
  detail::require(sequence.rows() >= 1, "bigru_forward: empty sequence");
  detail::require(!layer.backward.empty() && layer.backward.hidden_dim() == layer.forward.hidden_dim() &&
                      layer.backward.input_dim() == layer.forward.input_dim(),
                  "bigru_forward: forward and backward dimensions differ");
  if (static_cast<std::size_t>(sequence.cols()) != layer.forward.input_dim()) {
    throw InvalidArgument("bigru_forward: expected " + std::to_string(layer.forward.input_dim()) +
                          " input columns, got " + std::to_string(sequence.cols()));
  }
  Sequence inputs;
  for (Eigen::Index t = 0; t < sequence.rows(); ++t) inputs.push_back(sequence.row(t).transpose());
  const LayerCache cache = layer_forward(layer, Mode::BiGru, inputs);
  Eigen::MatrixXd out(sequence.rows(), static_cast<Eigen::Index>(layer.forward.hidden_dim()));
  for (Eigen::Index t = 0; t < sequence.rows(); ++t) out.row(t) = cache.outputs[static_cast<std::size_t>(t)].transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Model

inline ForwardCache model_forward(const Model& m, const Sequence& inputs) {
  check_model(m);
  detail::require(!inputs.empty(), "model_forward: empty sequence");
  for (const auto& x : inputs) {
    if (static_cast<std::size_t>(x.rows()) != m.input_dim() || x.cols() != inputs.front().cols()) {
      throw InvalidArgument("model_forward: expected " + std::to_string(m.input_dim()) +
                            " features per step, got " + std::to_string(x.rows()));
    }
  }
  ForwardCache cache;
  cache.layer_inputs.push_back(inputs);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    cache.layers.push_back(layer_forward(m.layers[l], m.mode, cache.layer_inputs.back()));
    if (l + 1 < m.layers.size()) cache.layer_inputs.push_back(cache.layers.back().outputs);
  }
  const Eigen::MatrixXd& last = cache.layers.back().outputs.back();
  cache.predictions = Eigen::RowVectorXd::Constant(last.cols(), m.head.bias);
  for (Eigen::Index n = 0; n < last.cols(); ++n) {
    double sum = m.head.bias;
    for (Eigen::Index i = 0; i < last.rows(); ++i) sum += m.head.weights(i) * last(i, n);
    cache.predictions(n) = sum;
  }
  return cache;
}

// Windows [begin, end) of a windowed set as a batched sequence.
inline Sequence to_sequence(const WindowedSet& ws, std::size_t begin, std::size_t end) {
  detail::require(begin <= end && end <= ws.size(), "to_sequence: range out of bounds");
  Sequence seq(ws.window_length,
               Eigen::MatrixXd(static_cast<Eigen::Index>(ws.n_features), static_cast<Eigen::Index>(end - begin)));
  for (std::size_t k = begin; k < end; ++k) {
    for (std::size_t t = 0; t < ws.window_length; ++t) {
      seq[t].col(static_cast<Eigen::Index>(k - begin)) =
          Eigen::Map<const Eigen::VectorXd>(ws.step(k, t), static_cast<Eigen::Index>(ws.n_features));
    }
  }
  return seq;
}

// Sequence from one window given as [W x features].
inline Sequence to_sequence(const Eigen::MatrixXd& window) {
  Sequence seq;
  for (Eigen::Index t = 0; t < window.rows(); ++t) seq.push_back(window.row(t).transpose());
  return seq;
}

inline double predict_window(const Model& m, const Eigen::MatrixXd& window) {
  return model_forward(m, to_sequence(window)).predictions(0);
}

inline constexpr std::size_t kBatchChunk = 512;

inline Eigen::VectorXd predict(const Model& m, const WindowedSet& ws) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ws.size()));
  for (std::size_t begin = 0; begin < ws.size(); begin += kBatchChunk) {
    const std::size_t end = std::min(ws.size(), begin + kBatchChunk);
    out.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        model_forward(m, to_sequence(ws, begin, end)).predictions.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backpropagation through time

namespace detail {

// Accumulates parameter gradients of one scan into `grad` and adds the input
// gradients into `d_inputs` (timestep order). `d_outputs[t]` is dLoss/dh at
// timestep t from above.
inline void scan_backward(const GruParams& p, const ScanCache& cache, const Sequence& inputs,
                          const Sequence& d_outputs, GruParams& grad, Sequence& d_inputs) {
  const std::size_t steps = inputs.size();
  Eigen::MatrixXd carry = Eigen::MatrixXd::Zero(p.w_reset.rows(), inputs.front().cols());
  for (std::size_t s = steps; s-- > 0;) {
    const std::size_t t = cache.reversed ? steps - 1 - s : s;
    const Eigen::MatrixXd& h_prev = cache.states[s];
    const Eigen::MatrixXd& r = cache.reset[s];
    const Eigen::MatrixXd& z = cache.update[s];
    const Eigen::MatrixXd& c = cache.candidate[s];
    const Eigen::MatrixXd& x = inputs[t];

    const Eigen::ArrayXXd dh = (d_outputs[t] + carry).array();
    const Eigen::MatrixXd da_candidate = (dh * z.array() * (1.0 - c.array().square())).matrix();
    const Eigen::MatrixXd da_update = (dh * (c - h_prev).array() * z.array() * (1.0 - z.array())).matrix();
    const Eigen::MatrixXd gated = r.cwiseProduct(h_prev);
    const Eigen::MatrixXd d_gated = p.w_candidate.transpose() * da_candidate;
    const Eigen::MatrixXd da_reset =
        (d_gated.array() * h_prev.array() * r.array() * (1.0 - r.array())).matrix();

    grad.w_candidate.noalias() += da_candidate * gated.transpose();
    grad.u_candidate.noalias() += da_candidate * x.transpose();
    grad.b_candidate += da_candidate.rowwise().sum();
    grad.w_update.noalias() += da_update * h_prev.transpose();
    grad.u_update.noalias() += da_update * x.transpose();
    grad.b_update += da_update.rowwise().sum();
    grad.w_reset.noalias() += da_reset * h_prev.transpose();
    grad.u_reset.noalias() += da_reset * x.transpose();
    grad.b_reset += da_reset.rowwise().sum();

    carry = (dh * (1.0 - z.array())).matrix() + d_gated.cwiseProduct(r);
    carry.noalias() += p.w_update.transpose() * da_update;
    carry.noalias() += p.w_reset.transpose() * da_reset;

    d_inputs[t].noalias() += p.u_reset.transpose() * da_reset;
    d_inputs[t].noalias() += p.u_update.transpose() * da_update;
    d_inputs[t].noalias() += p.u_candidate.transpose() * da_candidate;
  }
}

}  // namespace detail

// Adds dLoss/dparams into `grad` (shaped like `m`) given dLoss/dprediction
// for each window of the batch.
inline void model_backward(const Model& m, const ForwardCache& cache, const Eigen::RowVectorXd& d_pred,
                           Model& grad) {
  if (cache.layers.size() != m.layers.size() || cache.predictions.size() != d_pred.size()) {
    throw InvalidArgument("model_backward: cache does not match model or batch");
  }
  const Eigen::MatrixXd& last = cache.layers.back().outputs.back();
  grad.head.weights.noalias() += last * d_pred.transpose();
  grad.head.bias += d_pred.sum();

  const std::size_t steps = cache.layer_inputs.front().size();
  const auto batch = d_pred.size();
  const auto hidden = static_cast<Eigen::Index>(m.hidden_dim());
  Sequence d_outputs(steps, Eigen::MatrixXd::Zero(hidden, batch));
  d_outputs.back() = m.head.weights * d_pred;

  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const Sequence& inputs = cache.layer_inputs[l];
    Sequence d_inputs(steps, Eigen::MatrixXd::Zero(inputs.front().rows(), batch));
    detail::scan_backward(m.layers[l].forward, cache.layers[l].forward, inputs, d_outputs, grad.layers[l].forward,
                          d_inputs);
    if (m.mode == Mode::BiGru) {
      detail::scan_backward(m.layers[l].backward, cache.layers[l].backward, inputs, d_outputs,
                            grad.layers[l].backward, d_inputs);
    }
    d_outputs = std::move(d_inputs);
  }
}

inline Model model_backward(const Model& m, const ForwardCache& cache, const Eigen::RowVectorXd& d_pred) {
  Model grad = zeros_like(m);
  model_backward(m, cache, d_pred, grad);
  return grad;
}

inline Model model_backward(const Model& m, const ForwardCache& cache, double d_pred) {
  return model_backward(m, cache, Eigen::RowVectorXd::Constant(1, d_pred));
}

// Mean squared error over all windows and its gradient, accumulated over
// fixed-size chunks of windows.
inline double mse_loss_and_gradient(const Model& m, const WindowedSet& ws, Model& grad) {
  detail::require(ws.size() > 0, "loss: empty training set");
  grad = zeros_like(m);
  const auto n = static_cast<double>(ws.size());
  double sse = 0.0;
  for (std::size_t begin = 0; begin < ws.size(); begin += kBatchChunk) {
    const std::size_t end = std::min(ws.size(), begin + kBatchChunk);
    const ForwardCache cache = model_forward(m, to_sequence(ws, begin, end));
    const Eigen::RowVectorXd err =
        cache.predictions -
        ws.targets.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)).transpose();
    sse += err.squaredNorm();
    model_backward(m, cache, (2.0 / n) * err, grad);
  }
  return sse / n;
}

}  // namespace pue

#endif  // PUE_FORECAST_RNN_HPP_
