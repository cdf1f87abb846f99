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

// Telemetry tables: CSV ingestion, min-max scaling, sliding windows and
// chronological splits.

#ifndef PUE_FORECAST_DATASET_HPP_
#define PUE_FORECAST_DATASET_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pue_forecast/error.hpp"

namespace pue {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::string_view kTimestampColumn = "timestamp";
inline constexpr std::string_view kTargetColumn = "PUE";

// ---------------------------------------------------------------------------
// Timestamps

// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace the 'T').
inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
  int year = 0;
  unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0;
  std::string buffer(text);
  int consumed = 0;
  char sep = 0;
  const int fields = std::sscanf(buffer.c_str(), "%4d-%2u-%2u%c%2u:%2u%n", &year, &month,
                                 &day, &sep, &hour, &minute, &consumed);
  if (fields < 6 || (sep != 'T' && sep != ' ')) return std::nullopt;
  std::string_view rest = std::string_view(buffer).substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest.front() == ':') {
    int more = 0;
    if (std::sscanf(rest.data(), ":%2u%n", &second, &more) != 1) return std::nullopt;
    rest.remove_prefix(static_cast<std::size_t>(more));
  }
  if (rest == "Z") rest = {};
  if (!rest.empty()) return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) return std::nullopt;
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

inline std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{ts - day_point};
  char out[80];
  std::snprintf(out, sizeof(out), "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return out;
}

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double value) {
  char out[64];
  const auto result = std::to_chars(out, out + sizeof(out), value);
  return std::string(out, result.ptr);
}

// ---------------------------------------------------------------------------
// Dataset

// Samples x features matrix in native units plus the PUE target.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<Timestamp> timestamps;
  Eigen::MatrixXd X;  // n_samples x n_features
  Eigen::VectorXd y;  // n_samples

  std::size_t n_samples() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(X.cols()); }

  std::optional<std::size_t> feature_index(std::string_view name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    if (it == feature_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_names.begin());
  }

  // Throws InvalidArgument when the shape or uniqueness invariants are broken
  // or a value is not finite.
  void validate() const {
    detail::require(static_cast<std::size_t>(y.size()) == n_samples(),
                    "dataset: target length does not match row count");
    detail::require(timestamps.size() == n_samples(),
                    "dataset: timestamp count does not match row count");
    detail::require(feature_names.size() == n_features(),
                    "dataset: feature name count does not match column count");
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names) {
      detail::require(seen.insert(name).second, "dataset: duplicate feature name '" + name + "'");
    }
    detail::require(X.allFinite() && y.allFinite(), "dataset: non-finite value");
  }

  // Contiguous row range [begin, end).
  Dataset rows(std::size_t begin, std::size_t end) const {
    detail::require(begin <= end && end <= n_samples(), "dataset: row range out of bounds");
    const auto count = static_cast<Eigen::Index>(end - begin);
    const auto first = static_cast<Eigen::Index>(begin);
    Dataset out;
    out.feature_names = feature_names;
    out.timestamps.assign(timestamps.begin() + first, timestamps.begin() + first + count);
    out.X = X.middleRows(first, count);
    out.y = y.segment(first, count);
    return out;
  }

  // Projection onto the named columns, in the given order.
  Dataset select(const std::vector<std::string>& names) const {
    Dataset out;
    out.feature_names = names;
    out.timestamps = timestamps;
    out.y = y;
    out.X.resize(X.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto index = feature_index(names[j]);
      if (!index) throw InvalidArgument("unknown feature '" + names[j] + "'");
      out.X.col(static_cast<Eigen::Index>(j)) = X.col(static_cast<Eigen::Index>(*index));
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string_view trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  text = text.substr(first, last - first + 1);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    text = text.substr(1, text.size() - 2);
  }
  return text;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline std::optional<double> parse_number(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace detail

enum class TargetColumn { Required, Optional };

// Reads a telemetry table. Columns are matched by name: `timestamp` and `PUE`
// are required, every other column is a feature (order preserved). With
// TargetColumn::Optional a table without `PUE` is accepted and y is NaN.
inline Dataset parse_csv(std::istream& in, TargetColumn target = TargetColumn::Required) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("csv: missing header row", 0, "");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::vector<std::string> header;
  for (const auto field : detail::split_fields(line)) header.emplace_back(field);
  std::optional<std::size_t> ts_col, target_col;
  std::vector<std::size_t> feature_cols;
  Dataset ds;
  std::unordered_set<std::string> seen;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name.empty()) throw CsvError("csv: empty column name at position " + std::to_string(c + 1), 0, "");
    if (!seen.insert(name).second) throw CsvError("csv: duplicate column '" + name + "'", 0, name);
    if (name == kTimestampColumn) {
      ts_col = c;
    } else if (name == kTargetColumn) {
      target_col = c;
    } else {
      feature_cols.push_back(c);
      ds.feature_names.push_back(name);
    }
  }
  if (!target_col && target == TargetColumn::Required) {
    throw CsvError("csv: missing target column 'PUE'", 0, std::string(kTargetColumn));
  }
  if (!ts_col) throw CsvError("csv: missing column 'timestamp'", 0, std::string(kTimestampColumn));

  std::vector<double> values;
  std::vector<double> targets;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const auto fields = detail::split_fields(line);
    if (fields.size() != header.size()) {
      throw CsvError("csv: row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                         " fields, expected " + std::to_string(header.size()),
                     row, "");
    }
    const auto ts = parse_timestamp(fields[*ts_col]);
    if (!ts) {
      throw CsvError("csv: bad timestamp '" + std::string(fields[*ts_col]) + "' at row " +
                         std::to_string(row),
                     row, std::string(kTimestampColumn));
    }
    if (!ds.timestamps.empty() && *ts <= ds.timestamps.back()) {
      throw CsvError("csv: timestamps not strictly increasing at row " + std::to_string(row), row,
                     std::string(kTimestampColumn));
    }
    ds.timestamps.push_back(*ts);
    auto cell = [&](std::size_t c) {
      const auto value = detail::parse_number(fields[c]);
      if (!value || !std::isfinite(*value)) {
        throw CsvError("csv: non-numeric value '" + std::string(fields[c]) + "' at row " +
                           std::to_string(row) + ", column '" + header[c] + "'",
                       row, header[c]);
      }
      return *value;
    };
    for (const auto c : feature_cols) values.push_back(cell(c));
    targets.push_back(target_col ? cell(*target_col) : std::numeric_limits<double>::quiet_NaN());
  }

  const auto n = static_cast<Eigen::Index>(row);
  const auto f = static_cast<Eigen::Index>(feature_cols.size());
  ds.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, f);
  ds.y = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
  return ds;
}

inline Dataset load_csv(const std::filesystem::path& path, TargetColumn target = TargetColumn::Required) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return parse_csv(in, target);
  } catch (const CsvError& e) {
    throw CsvError(path.string() + ": " + e.what(), e.row(), e.column());
  }
}

// Writes `timestamp,<features...>,PUE` with round-trip precision.
inline void write_csv(const Dataset& ds, std::ostream& out) {
  out << kTimestampColumn;
  for (const auto& name : ds.feature_names) out << ',' << name;
  out << ',' << kTargetColumn << '\n';
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    out << format_timestamp(ds.timestamps[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < ds.X.cols(); ++j) out << ',' << format_double(ds.X(i, j));
    out << ',' << format_double(ds.y(i)) << '\n';
  }
}

inline void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_csv(ds, out);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Min-max scaling

struct NormalizationParams {
  std::vector<std::string> feature_names;
  Eigen::VectorXd feature_min;
  Eigen::VectorXd feature_max;
  double target_min = 0.0;
  double target_max = 1.0;

  bool is_constant(std::size_t feature) const {
    const auto i = static_cast<Eigen::Index>(feature);
    return feature_min(i) == feature_max(i);
  }
  bool target_is_constant() const { return target_min == target_max; }
};

inline NormalizationParams fit_normalizer(const Dataset& ds) {
  detail::require(ds.n_samples() > 0, "fit_normalizer: empty dataset");
  NormalizationParams p;
  p.feature_names = ds.feature_names;
  p.feature_min = ds.X.colwise().minCoeff().transpose();
  p.feature_max = ds.X.colwise().maxCoeff().transpose();
  p.target_min = ds.y.minCoeff();
  p.target_max = ds.y.maxCoeff();
  return p;
}

namespace detail {

inline double scale(double x, double lo, double hi) { return lo == hi ? 0.0 : (x - lo) / (hi - lo); }
inline double unscale(double x, double lo, double hi) { return x * (hi - lo) + lo; }

inline void require_same_features(const Dataset& ds, const NormalizationParams& p) {
  if (ds.feature_names != p.feature_names) {
    throw InvalidArgument("normalization parameters were fitted on different features");
  }
}

}  // namespace detail

// Scales features and target with parameters from the fitting partition.
// Values outside the fitted range are not clipped. Constant columns map to 0.
inline Dataset normalize(const Dataset& ds, const NormalizationParams& p) {
  detail::require_same_features(ds, p);
  Dataset out = ds;
  for (Eigen::Index j = 0; j < out.X.cols(); ++j) {
    const double lo = p.feature_min(j), hi = p.feature_max(j);
    for (Eigen::Index i = 0; i < out.X.rows(); ++i) out.X(i, j) = detail::scale(ds.X(i, j), lo, hi);
  }
  for (Eigen::Index i = 0; i < out.y.size(); ++i) {
    out.y(i) = detail::scale(ds.y(i), p.target_min, p.target_max);
  }
  return out;
}

inline Dataset denormalize(const Dataset& ds, const NormalizationParams& p) {
  detail::require_same_features(ds, p);
  Dataset out = ds;
  for (Eigen::Index j = 0; j < out.X.cols(); ++j) {
    const double lo = p.feature_min(j), hi = p.feature_max(j);
    for (Eigen::Index i = 0; i < out.X.rows(); ++i) out.X(i, j) = detail::unscale(ds.X(i, j), lo, hi);
  }
  for (Eigen::Index i = 0; i < out.y.size(); ++i) {
    out.y(i) = detail::unscale(ds.y(i), p.target_min, p.target_max);
  }
  return out;
}

inline Eigen::VectorXd normalize_target(const Eigen::VectorXd& y, const NormalizationParams& p) {
  return y.unaryExpr([&](double v) { return detail::scale(v, p.target_min, p.target_max); });
}

inline Eigen::VectorXd denormalize_target(const Eigen::VectorXd& y_norm, const NormalizationParams& p) {
  return y_norm.unaryExpr([&](double v) { return detail::unscale(v, p.target_min, p.target_max); });
}

// ---------------------------------------------------------------------------
// Windows and splits

// Sliding windows with stride 1. Window k covers rows [k, k + W) and its
// target is y[k + W - 1].
struct WindowedSet {
  std::size_t window_length = 0;
  std::size_t n_features = 0;
  std::vector<double> values;  // [window][timestep][feature], row-major
  Eigen::VectorXd targets;

  std::size_t size() const { return static_cast<std::size_t>(targets.size()); }

  // Step t of window k as a contiguous span of n_features values.
  const double* step(std::size_t k, std::size_t t) const {
    return values.data() + (k * window_length + t) * n_features;
  }

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> window(
      std::size_t k) const {
    return {step(k, 0), static_cast<Eigen::Index>(window_length), static_cast<Eigen::Index>(n_features)};
  }

  // Windows [begin, end) as a new set.
  WindowedSet slice(std::size_t begin, std::size_t end) const {
    detail::require(begin <= end && end <= size(), "windowed set: slice out of bounds");
    WindowedSet out;
    out.window_length = window_length;
    out.n_features = n_features;
    const std::size_t stride = window_length * n_features;
    out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                      values.begin() + static_cast<std::ptrdiff_t>(end * stride));
    out.targets = targets.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
    return out;
  }
};

inline WindowedSet window(const Dataset& ds, std::size_t length) {
  detail::require(length >= 1, "window: length must be positive");
  if (length > ds.n_samples()) {
    throw InvalidArgument("window: length " + std::to_string(length) + " exceeds " +
                          std::to_string(ds.n_samples()) + " samples");
  }
  WindowedSet ws;
  ws.window_length = length;
  ws.n_features = ds.n_features();
  const std::size_t count = ds.n_samples() - length + 1;
  ws.values.reserve(count * length * ws.n_features);
  ws.targets.resize(static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t t = 0; t < length; ++t) {
      const auto row = static_cast<Eigen::Index>(k + t);
      for (Eigen::Index j = 0; j < ds.X.cols(); ++j) ws.values.push_back(ds.X(row, j));
    }
    ws.targets(static_cast<Eigen::Index>(k)) = ds.y(static_cast<Eigen::Index>(k + length - 1));
  }
  return ws;
}

// First floor(fraction * n) rows train, the rest test. `min_rows` lets the
// caller demand enough rows in each partition for a window.
inline std::pair<Dataset, Dataset> split_chronological(const Dataset& ds, double train_fraction,
                                                       std::size_t min_rows = 1) {
  detail::require(train_fraction > 0.0 && train_fraction < 1.0,
                  "split: train fraction must lie in (0, 1)");
  const std::size_t n = ds.n_samples();
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  const std::size_t need = std::max<std::size_t>(min_rows, 1);
  if (n_train < need || n - n_train < need) {
    throw InvalidArgument("split: fraction " + format_double(train_fraction) + " of " +
                          std::to_string(n) + " rows leaves a partition with fewer than " +
                          std::to_string(need) + " rows");
  }
  return {ds.rows(0, n_train), ds.rows(n_train, n)};
}

}  // namespace pue

#endif  // PUE_FORECAST_DATASET_HPP_
