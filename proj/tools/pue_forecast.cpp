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

// pue-forecast: command-line front end for the forecasting pipeline.
//
//   generate         synthetic telemetry CSV
//   select-features  RFECV over a GBT hyperparameter grid
//   tune             GRU/BiGRU grid search with best-model checkpoints
//   train            one configuration, one feature set
//   predict          apply a checkpoint to a CSV
//   evaluate         metrics of a checkpoint on a CSV
//   compare          join a GRU and a BiGRU summary row by row
//   rerun            repeat a run from its manifest
//
// Every command that writes files also writes a JSON manifest holding the
// fully resolved options, so `rerun` reproduces the outputs exactly. Log
// verbosity comes from PUE_FORECAST_LOG (trace, debug, info, warn, error,
// off).

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pue_forecast/pue_forecast.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Logging and file helpers

std::shared_ptr<spdlog::logger> logger;

void init_logging() {
  logger = spdlog::stderr_color_mt("pue-forecast");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  logger->set_level(spdlog::level::info);
  const char* env = std::getenv("PUE_FORECAST_LOG");
  if (env == nullptr || *env == '\0') return;
  const std::string value = env;
  static const std::map<std::string, spdlog::level::level_enum> kLevels = {
      {"trace", spdlog::level::trace}, {"debug", spdlog::level::debug}, {"info", spdlog::level::info},
      {"warn", spdlog::level::warn},   {"warning", spdlog::level::warn}, {"error", spdlog::level::err},
      {"off", spdlog::level::off}};
  const auto it = kLevels.find(value);
  if (it == kLevels.end()) {
    logger->warn("ignoring PUE_FORECAST_LOG='{}'; expected trace, debug, info, warn, error or off", value);
    return;
  }
  logger->set_level(it->second);
}

void ensure_parent(const fs::path& path) {
  const auto parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw pue::Error("cannot create directory '" + parent.string() + "': " + ec.message());
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pue::Error("cannot write '" + path.string() + "'");
  body(out);
  out.flush();
  if (!out) throw pue::Error("write failed for '" + path.string() + "'");
  logger->debug("wrote {}", path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pue::Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw pue::FormatError(path.string() + ": " + e.what());
  }
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
void read_key(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <class T>
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

// ---------------------------------------------------------------------------
// Manifest

struct Invocation {
  std::vector<std::string> argv;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string started_at;
};

std::string utc_now() {
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return pue::format_timestamp(now) + "Z";
}

void write_manifest(const fs::path& path, const Invocation& run, const std::string& command, const json& config,
                    const json& seeds, const json& inputs, const json& outputs) {
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
  const json manifest = {{"tool", "pue-forecast"},
                         {"version", std::string(pue::kVersion)},
                         {"command", command},
                         {"config", config},
                         {"seeds", seeds},
                         {"inputs", inputs},
                         {"outputs", outputs},
                         {"argv", run.argv},
                         {"started_at", run.started_at},
                         {"duration_seconds", seconds}};
  write_file(path, [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
  logger->info("manifest {}", path.string());
}

// ---------------------------------------------------------------------------
// Shared pieces

struct ModelFlags {
  std::string mode = "bigru";
  int max_epochs = 4000;
  int eval_every = 500;
  std::size_t window = 6;
  double split = 0.8;
  bool fit_on_all = false;
  bool pue_units = false;
  bool checkpoint_on_train_loss = false;
  std::optional<double> clip_norm;
  std::uint64_t seed = 1;
  bool sidecar = false;

  json to_json() const {
    return {{"mode", mode},
            {"max_epochs", max_epochs},
            {"eval_every", eval_every},
            {"window", window},
            {"split", split},
            {"fit_on_all", fit_on_all},
            {"pue_units", pue_units},
            {"checkpoint_on_train_loss", checkpoint_on_train_loss},
            {"clip_norm", optional_json(clip_norm)},
            {"seed", seed},
            {"sidecar", sidecar}};
  }

  void from_json(const json& j) {
    read_key(j, "mode", mode);
    read_key(j, "max_epochs", max_epochs);
    read_key(j, "eval_every", eval_every);
    read_key(j, "window", window);
    read_key(j, "split", split);
    read_key(j, "fit_on_all", fit_on_all);
    read_key(j, "pue_units", pue_units);
    read_key(j, "checkpoint_on_train_loss", checkpoint_on_train_loss);
    read_key(j, "clip_norm", clip_norm);
    read_key(j, "seed", seed);
    read_key(j, "sidecar", sidecar);
  }

  void add_to(CLI::App& app) {
    app.add_option("--mode", mode, "Recurrent model: gru or bigru")
        ->check(CLI::IsMember({"gru", "bigru"}))
        ->capture_default_str();
    app.add_option("--max-epochs", max_epochs, "Full-batch epochs per configuration")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--eval-every", eval_every, "Held-out evaluation period in epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--window", window, "Window length in timesteps")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--split", split, "Chronological training fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app.add_flag("--fit-on-all", fit_on_all, "Fit the normalizer on all rows instead of training rows");
    app.add_flag("--pue-units", pue_units, "Report metrics in PUE units instead of normalized units");
    app.add_flag("--checkpoint-on-train-loss", checkpoint_on_train_loss,
                 "Keep the weights with the lowest training loss instead of held-out loss");
    app.add_option("--clip-norm", clip_norm, "Clip gradients to this global L2 norm")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Initialization seed")->capture_default_str();
    app.add_flag("--sidecar", sidecar, "Store checkpoint parameters in a .bin file next to the JSON");
  }

  pue::TrainConfig base_config() const {
    pue::TrainConfig c;
    c.mode = pue::parse_mode(mode);
    c.max_epochs = max_epochs;
    c.eval_every = eval_every;
    c.window = window;
    c.seed = seed;
    c.clip_norm = clip_norm;
    c.checkpoint_on_train_loss = checkpoint_on_train_loss;
    c.pue_units = pue_units;
    return c;
  }

  pue::TuneOptions tune_options(std::size_t workers) const {
    pue::TuneOptions o;
    o.train_fraction = split;
    o.fit_on_all = fit_on_all;
    o.workers = workers;
    return o;
  }

  pue::PayloadStorage storage() const {
    return sidecar ? pue::PayloadStorage::Sidecar : pue::PayloadStorage::Embedded;
  }
};

struct FeatureSource {
  std::string features;  // select-features JSON
  bool all_features = false;

  json to_json() const { return {{"features", features}, {"all_features", all_features}}; }
  void from_json(const json& j) {
    read_key(j, "features", features);
    read_key(j, "all_features", all_features);
  }

  void add_to(CLI::App& app) {
    auto* file = app.add_option("--features", features, "Feature-set JSON written by select-features");
    auto* all = app.add_flag("--all-features", all_features, "Use every feature column as a single set");
    file->excludes(all);
  }

  std::vector<std::vector<std::string>> load(const pue::Dataset& ds) const {
    if (all_features) return {ds.feature_names};
    if (features.empty()) throw pue::InvalidArgument("pass --features FILE or --all-features");
    auto sets = pue::feature_sets_from_json(read_json(features));
    if (sets.empty()) throw pue::InvalidArgument("'" + features + "' lists no feature sets");
    return sets;
  }

  json inputs() const { return all_features ? json(nullptr) : json(features); }
};

void check_split(double split) {
  if (!(split > 0.0 && split < 1.0)) throw pue::InvalidArgument("--split must lie strictly between 0 and 1");
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::size_t samples = 5000;
  std::size_t informative = 8;
  std::size_t noise = 24;
  std::uint64_t seed = 1;
  std::string output;
  std::string manifest;

  json to_json() const {
    return {{"samples", samples}, {"informative", informative}, {"noise", noise},
            {"seed", seed},       {"output", output},           {"manifest", manifest}};
  }
  void from_json(const json& j) {
    read_key(j, "samples", samples);
    read_key(j, "informative", informative);
    read_key(j, "noise", noise);
    read_key(j, "seed", seed);
    read_key(j, "output", output);
    read_key(j, "manifest", manifest);
  }
};

void run_generate(GenerateArgs a, const Invocation& run) {
  if (a.samples < 1) throw pue::InvalidArgument("--samples must be positive");
  if (a.informative < 3) throw pue::InvalidArgument("--informative must be at least 3");
  if (a.manifest.empty()) a.manifest = a.output + ".manifest.json";
  const pue::Dataset ds = pue::generate_synthetic({a.samples, a.informative, a.noise, a.seed});
  write_file(a.output, [&](std::ostream& out) { pue::write_csv(ds, out); });
  logger->info("generated {} rows x {} features -> {}", ds.n_samples(), ds.n_features(), a.output);
  write_manifest(a.manifest, run, "generate", a.to_json(), {{"data", a.seed}}, json::object(),
                 {{"dataset", a.output}});
}

// ---------------------------------------------------------------------------
// select-features

struct SelectArgs {
  std::string input;
  std::string output;
  std::string curves;
  std::vector<double> learning_rates = pue::RfecvGrid{}.learning_rates;
  std::vector<int> trees = pue::RfecvGrid{}.n_estimators;
  std::vector<int> depths = pue::RfecvGrid{}.max_depths;
  double lambda = 1.0;
  std::size_t top_k = 6;
  int step = 1;
  int folds = 5;
  double split = 0.8;
  bool fit_on_all = false;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::string manifest;

  json to_json() const {
    return {{"input", input}, {"output", output}, {"curves", curves},   {"lr", learning_rates},
            {"trees", trees}, {"depth", depths},  {"lambda", lambda},   {"top_k", top_k},
            {"step", step},   {"folds", folds},   {"split", split},     {"fit_on_all", fit_on_all},
            {"seed", seed},   {"workers", workers}, {"manifest", manifest}};
  }
  void from_json(const json& j) {
    read_key(j, "input", input);
    read_key(j, "output", output);
    read_key(j, "curves", curves);
    read_key(j, "lr", learning_rates);
    read_key(j, "trees", trees);
    read_key(j, "depth", depths);
    read_key(j, "lambda", lambda);
    read_key(j, "top_k", top_k);
    read_key(j, "step", step);
    read_key(j, "folds", folds);
    read_key(j, "split", split);
    read_key(j, "fit_on_all", fit_on_all);
    read_key(j, "seed", seed);
    read_key(j, "workers", workers);
    read_key(j, "manifest", manifest);
  }
};

void run_select(SelectArgs a, const Invocation& run) {
  check_split(a.split);
  if (a.curves.empty()) a.curves = with_suffix(a.output, "_curves.csv").string();
  if (a.manifest.empty()) a.manifest = a.output + ".manifest.json";

  const pue::Dataset ds = pue::load_csv(a.input);
  auto [train_rows, test_rows] = pue::split_chronological(ds, a.split);
  const auto norm = pue::fit_normalizer(a.fit_on_all ? ds : train_rows);
  const pue::Dataset scaled = pue::normalize(train_rows, norm);
  logger->info("rfecv on {} training rows of {} ({} features)", scaled.n_samples(), ds.n_samples(),
               ds.n_features());

  pue::RfecvGrid grid;
  grid.learning_rates = a.learning_rates;
  grid.n_estimators = a.trees;
  grid.max_depths = a.depths;
  grid.lambda = a.lambda;
  pue::RfecvOptions options;
  options.step = a.step;
  options.folds = a.folds;
  options.seed = a.seed;
  const auto total = grid.expand().size();
  logger->info("{} estimator configurations, top {}", total, a.top_k);

  const auto results = pue::rfecv_grid(scaled, grid, a.top_k, options, a.workers,
                                       [](std::size_t i, std::size_t n, const pue::RfecvResult& r) {
                                         logger->debug("config {}/{}: lr={} trees={} depth={} -> {} features, cv mse {}",
                                                       i + 1, n, r.config.learning_rate, r.config.n_estimators,
                                                       r.config.max_depth, r.best_count, r.best_mse);
                                       });
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    logger->info("#{}: lr={} trees={} depth={} selects {} features (cv mse {})", r + 1, res.config.learning_rate,
                 res.config.n_estimators, res.config.max_depth, res.best_count, res.best_mse);
  }
  write_file(a.output, [&](std::ostream& out) { out << pue::to_json(results).dump(2) << '\n'; });
  write_file(a.curves, [&](std::ostream& out) { pue::write_rfecv_curves(results, out); });
  write_manifest(a.manifest, run, "select-features", a.to_json(), {{"estimator", a.seed}}, {{"dataset", a.input}},
                 {{"feature_sets", a.output}, {"curves", a.curves}});
}

// ---------------------------------------------------------------------------
// tune

struct TuneArgs {
  std::string input;
  FeatureSource source;
  std::string output_dir;
  std::vector<std::size_t> layers = pue::TuneGrid{}.layers;
  std::vector<std::size_t> hidden = pue::TuneGrid{}.hidden_dims;
  std::vector<double> learning_rates = pue::TuneGrid{}.learning_rates;
  ModelFlags model;
  std::size_t workers = 1;
  std::string manifest;

  json to_json() const {
    json j = model.to_json();
    j.update(source.to_json());
    j.update({{"input", input},
              {"output_dir", output_dir},
              {"layers", layers},
              {"hidden", hidden},
              {"lr", learning_rates},
              {"workers", workers},
              {"manifest", manifest}});
    return j;
  }
  void from_json(const json& j) {
    model.from_json(j);
    source.from_json(j);
    read_key(j, "input", input);
    read_key(j, "output_dir", output_dir);
    read_key(j, "layers", layers);
    read_key(j, "hidden", hidden);
    read_key(j, "lr", learning_rates);
    read_key(j, "workers", workers);
    read_key(j, "manifest", manifest);
  }
};

std::string describe(const pue::TuneRecord& r) {
  std::ostringstream s;
  s << "set " << r.feature_set << " (" << r.features.size() << " features) L=" << r.config.layers
    << " H=" << r.config.hidden_dim << " lr=" << r.config.learning_rate;
  return s.str();
}

void log_record(const pue::TuneRecord& r) {
  if (r.failed) {
    logger->warn("{}: failed: {}", describe(r), r.failure);
  } else {
    logger->debug("{}: best epoch {} mse {} mae {}", describe(r), r.best_epoch, r.metrics.mse, r.metrics.mae);
  }
}

void run_tune(TuneArgs a, const Invocation& run) {
  check_split(a.model.split);
  const fs::path dir = a.output_dir;
  if (a.manifest.empty()) a.manifest = (dir / "manifest.json").string();

  const pue::Dataset ds = pue::load_csv(a.input);
  const auto sets = a.source.load(ds);
  pue::TuneGrid grid;
  grid.layers = a.layers;
  grid.hidden_dims = a.hidden;
  grid.learning_rates = a.learning_rates;
  const auto base = a.model.base_config();
  auto options = a.model.tune_options(a.workers);
  options.on_record = log_record;
  logger->info("tuning {} on {} feature sets x {} configurations, {} epochs each", a.model.mode, sets.size(),
               grid.expand(base).size(), base.max_epochs);

  const pue::TuneReport report = pue::grid_search(ds, sets, grid, base, options);

  json outputs = {{"summary", (dir / "summary.csv").string()},
                  {"records", (dir / "records.csv").string()},
                  {"history", (dir / "history.csv").string()}};
  write_file(dir / "summary.csv", [&](std::ostream& out) { pue::write_tune_summary(report, out); });
  write_file(dir / "records.csv", [&](std::ostream& out) { pue::write_tune_records(report, out); });
  write_file(dir / "history.csv", [&](std::ostream& out) { pue::write_tune_history(report, out); });
  json checkpoints = json::array();
  for (std::size_t s = 0; s < report.best_checkpoints.size(); ++s) {
    const auto& ckpt = report.best_checkpoints[s];
    if (!ckpt) {
      logger->warn("feature set {}: every configuration failed", s);
      checkpoints.push_back(nullptr);
      continue;
    }
    const fs::path path = dir / "checkpoints" / ("set_" + std::to_string(s) + ".json");
    ensure_parent(path);
    pue::save_checkpoint(*ckpt, path, a.model.storage());
    checkpoints.push_back(path.string());
    const auto& r = report.records[*report.best_per_set[s]];
    logger->info("{}: best epoch {} mse {} mae {} r2 {}", describe(r), r.best_epoch, r.metrics.mse, r.metrics.mae,
                 pue::format_r2(r.metrics));
  }
  outputs["checkpoints"] = checkpoints;
  if (report.best_overall) {
    logger->info("overall best: {}", describe(report.records[*report.best_overall]));
  }
  write_manifest(a.manifest, run, "tune", a.to_json(), {{"init", a.model.seed}},
                 {{"dataset", a.input}, {"feature_sets", a.source.inputs()}}, outputs);
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string input;
  FeatureSource source;
  std::size_t set = 0;
  std::string output;
  std::string history;
  std::size_t layers = 1;
  std::size_t hidden = 10;
  double learning_rate = 0.01;
  ModelFlags model;
  std::string manifest;

  json to_json() const {
    json j = model.to_json();
    j.update(source.to_json());
    j.update({{"input", input},
              {"set", set},
              {"output", output},
              {"history", history},
              {"layers", layers},
              {"hidden", hidden},
              {"lr", learning_rate},
              {"manifest", manifest}});
    return j;
  }
  void from_json(const json& j) {
    model.from_json(j);
    source.from_json(j);
    read_key(j, "input", input);
    read_key(j, "set", set);
    read_key(j, "output", output);
    read_key(j, "history", history);
    read_key(j, "layers", layers);
    read_key(j, "hidden", hidden);
    read_key(j, "lr", learning_rate);
    read_key(j, "manifest", manifest);
  }
};

void run_train(TrainArgs a, const Invocation& run) {
  check_split(a.model.split);
  if (a.history.empty()) a.history = with_suffix(a.output, "_history.csv").string();
  if (a.manifest.empty()) a.manifest = a.output + ".manifest.json";

  const pue::Dataset ds = pue::load_csv(a.input);
  const auto sets = a.source.load(ds);
  if (a.set >= sets.size()) {
    throw pue::InvalidArgument("--set " + std::to_string(a.set) + " out of range; the file lists " +
                               std::to_string(sets.size()) + " feature sets");
  }
  pue::TuneGrid grid;
  grid.layers = {a.layers};
  grid.hidden_dims = {a.hidden};
  grid.learning_rates = {a.learning_rate};
  const pue::TuneReport report =
      pue::grid_search(ds, {sets[a.set]}, grid, a.model.base_config(), a.model.tune_options(1));
  const auto& record = report.records.front();
  if (record.failed) throw pue::Error(describe(record) + ": " + record.failure);

  pue::save_checkpoint(*report.best_checkpoints.front(), (ensure_parent(a.output), a.output), a.model.storage());
  write_file(a.history, [&](std::ostream& out) { pue::write_tune_history(report, out); });
  logger->info("best epoch {} mse {} mae {} r2 {} -> {}", record.best_epoch, record.metrics.mse, record.metrics.mae,
               pue::format_r2(record.metrics), a.output);
  write_manifest(a.manifest, run, "train", a.to_json(), {{"init", a.model.seed}},
                 {{"dataset", a.input}, {"feature_sets", a.source.inputs()}},
                 {{"checkpoint", a.output}, {"history", a.history}});
}

// ---------------------------------------------------------------------------
// predict / evaluate

// Projects `ds` onto the checkpoint's features, normalizes with the stored
// parameters and windows it.
pue::WindowedSet prepare_for(const pue::Checkpoint& ckpt, const pue::Dataset& ds) {
  for (const auto& name : ckpt.features) {
    if (!ds.feature_index(name)) throw pue::InvalidArgument("input lacks feature column '" + name + "'");
  }
  const std::size_t w = ckpt.config.window;
  if (ds.n_samples() < w) {
    throw pue::InvalidArgument("input has " + std::to_string(ds.n_samples()) + " rows, fewer than the window length " +
                               std::to_string(w));
  }
  return pue::window(pue::normalize(ds.select(ckpt.features), ckpt.normalization), w);
}

struct PredictArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string manifest;

  json to_json() const {
    return {{"checkpoint", checkpoint}, {"input", input}, {"output", output}, {"manifest", manifest}};
  }
  void from_json(const json& j) {
    read_key(j, "checkpoint", checkpoint);
    read_key(j, "input", input);
    read_key(j, "output", output);
    read_key(j, "manifest", manifest);
  }
};

void run_predict(PredictArgs a, const Invocation& run) {
  if (a.manifest.empty()) a.manifest = a.output + ".manifest.json";
  const pue::Checkpoint ckpt = pue::load_checkpoint(a.checkpoint);
  const pue::Dataset ds = pue::load_csv(a.input, pue::TargetColumn::Optional);
  const pue::WindowedSet ws = prepare_for(ckpt, ds);
  const Eigen::VectorXd pue_pred = pue::denormalize_target(pue::predict(ckpt.model, ws), ckpt.normalization);
  const std::size_t w = ckpt.config.window;
  write_file(a.output, [&](std::ostream& out) {
    out << "timestamp,predicted_PUE\n";
    for (std::size_t k = 0; k < ws.size(); ++k) {
      out << pue::format_timestamp(ds.timestamps[k + w - 1]) << ','
          << pue::format_double(pue_pred(static_cast<Eigen::Index>(k))) << '\n';
    }
  });
  logger->info("{} predictions -> {}", ws.size(), a.output);
  write_manifest(a.manifest, run, "predict", a.to_json(), json::object(),
                 {{"checkpoint", a.checkpoint}, {"dataset", a.input}}, {{"predictions", a.output}});
}

struct EvaluateArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
  double split = 0.0;
  std::string units = "checkpoint";
  std::string manifest;

  json to_json() const {
    return {{"checkpoint", checkpoint}, {"input", input}, {"output", output},
            {"split", split},           {"units", units}, {"manifest", manifest}};
  }
  void from_json(const json& j) {
    read_key(j, "checkpoint", checkpoint);
    read_key(j, "input", input);
    read_key(j, "output", output);
    read_key(j, "split", split);
    read_key(j, "units", units);
    read_key(j, "manifest", manifest);
  }
};

void run_evaluate(EvaluateArgs a, const Invocation& run) {
  if (a.split != 0.0) check_split(a.split);
  const pue::Checkpoint ckpt = pue::load_checkpoint(a.checkpoint);
  pue::Dataset ds = pue::load_csv(a.input);
  if (a.split != 0.0) ds = pue::split_chronological(ds, a.split).second;
  const pue::WindowedSet ws = prepare_for(ckpt, ds);
  const bool pue_units = a.units == "checkpoint" ? ckpt.config.pue_units : a.units == "pue";
  const pue::MetricsReport m = pue::evaluate_model(ckpt.model, ws, ckpt.normalization, pue_units);
  const json doc = {{"checkpoint", a.checkpoint},
                    {"input", a.input},
                    {"windows", ws.size()},
                    {"units", pue_units ? "pue" : "normalized"},
                    {"metrics", pue::to_json(m)},
                    {"checkpoint_metrics", pue::to_json(ckpt.metrics)}};
  std::cout << doc.dump(2) << '\n';
  if (a.output.empty()) return;
  if (a.manifest.empty()) a.manifest = a.output + ".manifest.json";
  write_file(a.output, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
  write_manifest(a.manifest, run, "evaluate", a.to_json(), json::object(),
                 {{"checkpoint", a.checkpoint}, {"dataset", a.input}}, {{"metrics", a.output}});
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::string gru;
  std::string bigru;
  std::string output;
  std::string manifest;

  json to_json() const { return {{"gru", gru}, {"bigru", bigru}, {"output", output}, {"manifest", manifest}}; }
  void from_json(const json& j) {
    read_key(j, "gru", gru);
    read_key(j, "bigru", bigru);
    read_key(j, "output", output);
    read_key(j, "manifest", manifest);
  }
};

std::vector<std::vector<std::string>> read_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw pue::Error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("selected_features,layers,hidden,lr,epochs,MSE,MAE,R2", 0) != 0) {
    throw pue::FormatError(path.string() + ": not a tune summary");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream s(line);
    std::string field;
    while (std::getline(s, field, ',')) fields.push_back(field);
    while (fields.size() < 8) fields.emplace_back();
    rows.push_back(fields);
  }
  return rows;
}

void run_compare(CompareArgs a, const Invocation& run) {
  if (a.manifest.empty()) a.manifest = a.output + ".manifest.json";
  const auto gru = read_summary(a.gru);
  const auto bigru = read_summary(a.bigru);
  if (gru.size() != bigru.size()) {
    throw pue::InvalidArgument("summaries list " + std::to_string(gru.size()) + " and " +
                               std::to_string(bigru.size()) + " feature sets");
  }
  std::size_t bigru_wins = 0, compared = 0;
  write_file(a.output, [&](std::ostream& out) {
    out << "feature_set,selected_features,gru_MSE,bigru_MSE,gru_MAE,bigru_MAE,gru_R2,bigru_R2,bigru_better\n";
    for (std::size_t i = 0; i < gru.size(); ++i) {
      if (gru[i][0] != bigru[i][0]) {
        throw pue::InvalidArgument("row " + std::to_string(i + 1) + " compares different feature sets");
      }
      std::string better;
      if (!gru[i][5].empty() && !bigru[i][5].empty()) {
        const bool wins = std::stod(bigru[i][5]) <= std::stod(gru[i][5]);
        better = wins ? "1" : "0";
        bigru_wins += wins;
        ++compared;
      }
      out << i << ',' << gru[i][0] << ',' << gru[i][5] << ',' << bigru[i][5] << ',' << gru[i][6] << ','
          << bigru[i][6] << ',' << gru[i][7] << ',' << bigru[i][7] << ',' << better << '\n';
    }
  });
  logger->info("BiGRU MSE <= GRU MSE on {} of {} feature sets", bigru_wins, compared);
  write_manifest(a.manifest, run, "compare", a.to_json(), json::object(), {{"gru", a.gru}, {"bigru", a.bigru}},
                 {{"comparison", a.output}});
}

// ---------------------------------------------------------------------------
// rerun

void run_from_manifest(const fs::path& path, const Invocation& run) {
  const json manifest = read_json(path);
  std::string command;
  json config;
  try {
    command = manifest.at("command").get<std::string>();
    config = manifest.at("config");
  } catch (const json::exception& e) {
    throw pue::FormatError(path.string() + ": " + e.what());
  }
  logger->info("rerunning '{}' from {}", command, path.string());
  auto load = [&](auto args) {
    args.from_json(config);
    return args;
  };
  if (command == "generate") return run_generate(load(GenerateArgs{}), run);
  if (command == "select-features") return run_select(load(SelectArgs{}), run);
  if (command == "tune") return run_tune(load(TuneArgs{}), run);
  if (command == "train") return run_train(load(TrainArgs{}), run);
  if (command == "predict") return run_predict(load(PredictArgs{}), run);
  if (command == "evaluate") return run_evaluate(load(EvaluateArgs{}), run);
  if (command == "compare") return run_compare(load(CompareArgs{}), run);
  throw pue::FormatError(path.string() + ": unknown command '" + command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  Invocation run;
  run.argv.assign(argv, argv + argc);
  run.started_at = utc_now();

  CLI::App app{"Data-center PUE forecasting: synthetic data, RFECV feature selection, GRU/BiGRU tuning"};
  app.set_version_flag("--version", std::string(pue::kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic telemetry CSV");
  generate->add_option("--samples", gen.samples, "Number of rows")->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--informative", gen.informative, "PUE driver channels (at least 3)")
      ->check(CLI::Range(std::size_t{3}, std::size_t{1000}))
      ->capture_default_str();
  generate->add_option("--noise", gen.noise, "Uninformative channels")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  generate->add_option("-o,--output", gen.output, "Output CSV")->required();
  generate->add_option("--manifest", gen.manifest, "Manifest path (default <output>.manifest.json)");

  SelectArgs sel;
  auto* select = app.add_subcommand("select-features", "Rank feature sets with RFECV over a GBT grid");
  select->add_option("-i,--input", sel.input, "Input CSV")->required();
  select->add_option("-o,--output", sel.output, "Output JSON")->required();
  select->add_option("--curves", sel.curves, "MSE-versus-count CSV (default <output stem>_curves.csv)");
  select->add_option("--lr", sel.learning_rates, "Estimator learning rates")->delimiter(',')->capture_default_str();
  select->add_option("--trees", sel.trees, "Estimator tree counts")->delimiter(',')->capture_default_str();
  select->add_option("--depth", sel.depths, "Estimator maximum depths")->delimiter(',')->capture_default_str();
  select->add_option("--lambda", sel.lambda, "L2 leaf regularization")->capture_default_str();
  select->add_option("--top-k", sel.top_k, "Feature sets to keep")->check(CLI::PositiveNumber)->capture_default_str();
  select->add_option("--step", sel.step, "Features removed per iteration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  select->add_option("--folds", sel.folds, "Cross-validation folds")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  select->add_option("--split", sel.split, "Chronological training fraction; selection sees training rows only")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  select->add_flag("--fit-on-all", sel.fit_on_all, "Fit the normalizer on all rows");
  select->add_option("--seed", sel.seed, "Estimator seed")->capture_default_str();
  select->add_option("--workers", sel.workers, "Concurrent grid points")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  select->add_option("--manifest", sel.manifest, "Manifest path (default <output>.manifest.json)");

  TuneArgs tun;
  auto* tune = app.add_subcommand("tune", "Grid-search GRU or BiGRU models per feature set");
  tune->add_option("-i,--input", tun.input, "Input CSV")->required();
  tun.source.add_to(*tune);
  tune->add_option("-o,--output-dir", tun.output_dir, "Directory for reports and checkpoints")->required();
  tune->add_option("--layers", tun.layers, "Layer counts")->delimiter(',')->capture_default_str();
  tune->add_option("--hidden", tun.hidden, "Hidden sizes")->delimiter(',')->capture_default_str();
  tune->add_option("--lr", tun.learning_rates, "Adam learning rates")->delimiter(',')->capture_default_str();
  tun.model.add_to(*tune);
  tune->add_option("--workers", tun.workers, "Concurrent grid points")->check(CLI::PositiveNumber)->capture_default_str();
  tune->add_option("--manifest", tun.manifest, "Manifest path (default <output-dir>/manifest.json)");

  TrainArgs trn;
  auto* train = app.add_subcommand("train", "Train one configuration on one feature set");
  train->add_option("-i,--input", trn.input, "Input CSV")->required();
  trn.source.add_to(*train);
  train->add_option("--set", trn.set, "Index of the feature set in --features")->capture_default_str();
  train->add_option("-o,--output", trn.output, "Checkpoint JSON")->required();
  train->add_option("--history", trn.history, "Evaluation history CSV (default <output stem>_history.csv)");
  train->add_option("--layers", trn.layers, "Layers")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--hidden", trn.hidden, "Hidden size")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lr", trn.learning_rate, "Adam learning rate")->capture_default_str();
  trn.model.add_to(*train);
  train->add_option("--manifest", trn.manifest, "Manifest path (default <output>.manifest.json)");

  PredictArgs pre;
  auto* predict = app.add_subcommand("predict", "Predict PUE with a checkpoint");
  predict->add_option("-c,--checkpoint", pre.checkpoint, "Checkpoint JSON")->required();
  predict->add_option("-i,--input", pre.input, "Input CSV (PUE column optional)")->required();
  predict->add_option("-o,--output", pre.output, "Predictions CSV")->required();
  predict->add_option("--manifest", pre.manifest, "Manifest path (default <output>.manifest.json)");

  EvaluateArgs eva;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a CSV");
  evaluate->add_option("-c,--checkpoint", eva.checkpoint, "Checkpoint JSON")->required();
  evaluate->add_option("-i,--input", eva.input, "Input CSV")->required();
  evaluate->add_option("-o,--output", eva.output, "Metrics JSON (also printed to stdout)");
  evaluate->add_option("--split", eva.split, "Score only the rows after this training fraction")
      ->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--units", eva.units, "checkpoint, normalized or pue")
      ->check(CLI::IsMember({"checkpoint", "normalized", "pue"}))
      ->capture_default_str();
  evaluate->add_option("--manifest", eva.manifest, "Manifest path (default <output>.manifest.json)");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Join GRU and BiGRU tune summaries row by row");
  compare->add_option("--gru", cmp.gru, "GRU summary.csv")->required();
  compare->add_option("--bigru", cmp.bigru, "BiGRU summary.csv")->required();
  compare->add_option("-o,--output", cmp.output, "Comparison CSV")->required();
  compare->add_option("--manifest", cmp.manifest, "Manifest path (default <output>.manifest.json)");

  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) run_generate(gen, run);
    if (*select) run_select(sel, run);
    if (*tune) run_tune(tun, run);
    if (*train) run_train(trn, run);
    if (*predict) run_predict(pre, run);
    if (*evaluate) run_evaluate(eva, run);
    if (*compare) run_compare(cmp, run);
    if (*rerun) run_from_manifest(manifest_path, run);
  } catch (const std::exception& e) {
    logger->error("{}", e.what());
    return 1;
  }
  return 0;
}
