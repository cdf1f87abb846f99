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

// Checkpoint file format.
//
// A checkpoint is a JSON document:
//
//   {
//     "format": "pue-forecast-checkpoint",
//     "version": 1,
//     "config": { mode, layers, hidden_dim, learning_rate, ... },
//     "features": [ names in model input order ],
//     "normalization": { feature_min, feature_max, target_min, target_max },
//     "best_epoch": int, "best_loss": number,
//     "metrics": { mse, mae, r2 (null when undefined), n },
//     "tensors": [ { "name", "shape": [rows, cols], "offset" } ... ],
//     "payload": { "dtype": "float64-le", "order": "row-major", "count",
//                  "encoding": "base64", "data": "..." }
//   }
//
// Tensor values are concatenated in manifest order, each row-major, as
// little-endian IEEE-754 doubles; `offset` counts elements. With the sidecar
// encoding, "data" is replaced by "path", a file next to the JSON holding the
// same bytes.

#ifndef PUE_FORECAST_CHECKPOINT_HPP_
#define PUE_FORECAST_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pue_forecast/dataset.hpp"
#include "pue_forecast/detail/base64.hpp"
#include "pue_forecast/error.hpp"
#include "pue_forecast/metrics.hpp"
#include "pue_forecast/rnn.hpp"
#include "pue_forecast/training.hpp"

namespace pue {

inline constexpr std::string_view kCheckpointFormat = "pue-forecast-checkpoint";

enum class PayloadStorage { Embedded, Sidecar };

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"mode", to_string(c.mode)},
                      {"layers", c.layers},
                      {"hidden_dim", c.hidden_dim},
                      {"learning_rate", c.learning_rate},
                      {"max_epochs", c.max_epochs},
                      {"eval_every", c.eval_every},
                      {"seed", c.seed},
                      {"window", c.window},
                      {"beta1", c.beta1},
                      {"beta2", c.beta2},
                      {"epsilon", c.epsilon},
                      {"clip_norm", nullptr},
                      {"checkpoint_on_train_loss", c.checkpoint_on_train_loss},
                      {"pue_units", c.pue_units}};
  if (c.clip_norm) j["clip_norm"] = *c.clip_norm;
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.layers = j.at("layers").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.eval_every = j.at("eval_every").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.window = j.at("window").get<std::size_t>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  if (!j.at("clip_norm").is_null()) c.clip_norm = j.at("clip_norm").get<double>();
  c.checkpoint_on_train_loss = j.at("checkpoint_on_train_loss").get<bool>();
  c.pue_units = j.at("pue_units").get<bool>();
  return c;
}

inline nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j = {{"mse", m.mse}, {"mae", m.mae}, {"r2", nullptr}, {"n", m.n}};
  if (m.r2) j["r2"] = *m.r2;
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.mse = j.at("mse").get<double>();
  m.mae = j.at("mae").get<double>();
  if (!j.at("r2").is_null()) m.r2 = j.at("r2").get<double>();
  m.n = j.at("n").get<std::size_t>();
  return m;
}

namespace detail {

inline std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<std::uint8_t> to_le_bytes(const std::vector<double>& values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (const double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return bytes;
}

inline std::vector<double> from_le_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 8 != 0) throw FormatError("checkpoint: payload is not a whole number of doubles");
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t{bytes[i * 8 + static_cast<std::size_t>(b)]} << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace detail

// Row-major concatenation of every tensor, plus the manifest describing it.
inline std::pair<nlohmann::json, std::vector<double>> flatten_model(const Model& model) {
  nlohmann::json manifest = nlohmann::json::array();
  std::vector<double> flat;
  Model::visit(model, [&](const std::string& name, std::span<const double> data, Eigen::Index rows,
                          Eigen::Index cols) {
    manifest.push_back({{"name", name}, {"shape", {rows, cols}}, {"offset", flat.size()}});
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) flat.push_back(data[static_cast<std::size_t>(j * rows + i)]);
    }
  });
  return {manifest, flat};
}

inline void unflatten_model(Model& model, const nlohmann::json& manifest, const std::vector<double>& flat) {
  std::size_t index = 0;
  Model::visit(model, [&](const std::string& name, std::span<double> data, Eigen::Index rows, Eigen::Index cols) {
    if (index >= manifest.size()) throw FormatError("checkpoint: manifest is missing tensor '" + name + "'");
    const auto& entry = manifest[index++];
    const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
    if (entry.at("name").get<std::string>() != name || shape.size() != 2 || shape[0] != rows || shape[1] != cols) {
      throw FormatError("checkpoint: tensor '" + name + "' does not match the configured architecture");
    }
    const auto offset = entry.at("offset").get<std::size_t>();
    if (offset + data.size() > flat.size()) throw FormatError("checkpoint: payload too short for '" + name + "'");
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        data[static_cast<std::size_t>(j * rows + i)] = flat[offset + static_cast<std::size_t>(i * cols + j)];
      }
    }
  });
  if (index != manifest.size()) throw FormatError("checkpoint: manifest has extra tensors");
}

// `sidecar_name` is only used with PayloadStorage::Sidecar; the caller writes
// the returned bytes to that file.
inline nlohmann::json checkpoint_to_json(const Checkpoint& ckpt, PayloadStorage storage = PayloadStorage::Embedded,
                                         const std::string& sidecar_name = {},
                                         std::vector<std::uint8_t>* sidecar_bytes = nullptr) {
  auto [manifest, flat] = flatten_model(ckpt.model);
  const auto bytes = detail::to_le_bytes(flat);
  nlohmann::json payload = {{"dtype", "float64-le"}, {"order", "row-major"}, {"count", flat.size()}};
  if (storage == PayloadStorage::Embedded) {
    payload["encoding"] = "base64";
    payload["data"] = detail::base64_encode(bytes);
  } else {
    payload["encoding"] = "sidecar";
    payload["path"] = sidecar_name;
    if (sidecar_bytes) *sidecar_bytes = bytes;
  }
  const auto& norm = ckpt.normalization;
  return {{"format", kCheckpointFormat},
          {"version", Checkpoint::kFormatVersion},
          {"config", to_json(ckpt.config)},
          {"features", ckpt.features},
          {"normalization",
           {{"feature_names", norm.feature_names},
            {"feature_min", detail::to_vector(norm.feature_min)},
            {"feature_max", detail::to_vector(norm.feature_max)},
            {"target_min", norm.target_min},
            {"target_max", norm.target_max}}},
          {"best_epoch", ckpt.best_epoch},
          {"best_loss", ckpt.best_loss},
          {"metrics", to_json(ckpt.metrics)},
          {"tensors", manifest},
          {"payload", payload}};
}

// `base_dir` resolves a sidecar payload path.
inline Checkpoint checkpoint_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {}) {
  try {
    if (doc.at("format").get<std::string>() != kCheckpointFormat) throw FormatError("checkpoint: unknown format");
    const int version = doc.at("version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
      throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.config = train_config_from_json(doc.at("config"));
    ckpt.features = doc.at("features").get<std::vector<std::string>>();
    const auto& norm = doc.at("normalization");
    ckpt.normalization.feature_names = norm.at("feature_names").get<std::vector<std::string>>();
    ckpt.normalization.feature_min = detail::from_vector(norm.at("feature_min").get<std::vector<double>>());
    ckpt.normalization.feature_max = detail::from_vector(norm.at("feature_max").get<std::vector<double>>());
    ckpt.normalization.target_min = norm.at("target_min").get<double>();
    ckpt.normalization.target_max = norm.at("target_max").get<double>();
    ckpt.best_epoch = doc.at("best_epoch").get<int>();
    ckpt.best_loss = doc.at("best_loss").get<double>();
    ckpt.metrics = metrics_from_json(doc.at("metrics"));

    const auto& payload = doc.at("payload");
    if (payload.at("dtype").get<std::string>() != "float64-le" || payload.at("order").get<std::string>() != "row-major") {
      throw FormatError("checkpoint: unsupported payload layout");
    }
    std::vector<std::uint8_t> bytes;
    const auto encoding = payload.at("encoding").get<std::string>();
    if (encoding == "base64") {
      auto decoded = detail::base64_decode(payload.at("data").get<std::string>());
      if (!decoded) throw FormatError("checkpoint: invalid base64 payload");
      bytes = std::move(*decoded);
    } else if (encoding == "sidecar") {
      const auto path = base_dir / payload.at("path").get<std::string>();
      std::ifstream in(path, std::ios::binary);
      if (!in) throw FormatError("checkpoint: cannot open payload '" + path.string() + "'");
      bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else {
      throw FormatError("checkpoint: unknown payload encoding '" + encoding + "'");
    }
    const auto flat = detail::from_le_bytes(bytes);
    if (flat.size() != payload.at("count").get<std::size_t>()) throw FormatError("checkpoint: payload count mismatch");

    ckpt.model = zeros_model({ckpt.config.mode, ckpt.features.size(), ckpt.config.hidden_dim, ckpt.config.layers});
    unflatten_model(ckpt.model, doc.at("tensors"), flat);
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path,
                            PayloadStorage storage = PayloadStorage::Embedded) {
  std::vector<std::uint8_t> bytes;
  const std::string sidecar = path.filename().string() + ".bin";
  const auto doc = checkpoint_to_json(ckpt, storage, sidecar, &bytes);
  if (storage == PayloadStorage::Sidecar) {
    const auto bin_path = path.parent_path() / sidecar;
    std::ofstream bin(bin_path, std::ios::binary);
    bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!bin) throw Error("cannot write '" + bin_path.string() + "'");
  }
  std::ofstream out(path, std::ios::binary);
  out << doc.dump(2) << '\n';
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc, path.parent_path());
}

}  // namespace pue

#endif  // PUE_FORECAST_CHECKPOINT_HPP_
