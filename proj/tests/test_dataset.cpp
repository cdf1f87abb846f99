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
#include <sstream>
#include <string>

#include "pue_forecast/dataset.hpp"
#include "pue_forecast/synthetic.hpp"

namespace pue {
namespace {

Dataset parse(const std::string& text, TargetColumn target = TargetColumn::Required) {
  std::istringstream in(text);
  return parse_csv(in, target);
}

Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Dataset ds;
  for (Eigen::Index j = 0; j < X.cols(); ++j) ds.feature_names.push_back("f" + std::to_string(j));
  for (Eigen::Index i = 0; i < X.rows(); ++i) ds.timestamps.push_back(synthetic_epoch() + std::chrono::minutes{10} * i);
  ds.X = X;
  ds.y = y;
  return ds;
}

Dataset ramp(std::size_t n, std::size_t features = 1) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = static_cast<double>(100 * j + i);
    y(i) = 1.0 + 0.01 * static_cast<double>(i);
  }
  return make_dataset(X, y);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean(), db = b.array() - b.mean();
  return (da * db).sum() / std::sqrt(da.square().sum() * db.square().sum());
}

TEST(Csv, ParsesThreeRowTable) {
  const Dataset ds = parse(
      "timestamp,f1,f2,PUE\n"
      "2024-01-01T00:00:00,1.5,2,1.20\n"
      "2024-01-01T00:10:00,1.6,3,1.25\n"
      "2024-01-01T00:20:00,1.7,4,1.30\n");
  EXPECT_EQ(ds.n_samples(), 3u);
  EXPECT_EQ(ds.n_features(), 2u);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"f1", "f2"}));
  EXPECT_DOUBLE_EQ(ds.X(2, 0), 1.7);
  EXPECT_DOUBLE_EQ(ds.y(1), 1.25);
  EXPECT_NO_THROW(ds.validate());
}

TEST(Csv, ColumnsMatchedByName) {
  const Dataset ds = parse(
      "PUE,f2,timestamp,f1\n"
      "1.2,7,2024-01-01 00:00:00,8\n"
      "1.3,9,2024-01-01 00:10:00,10\n");
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"f2", "f1"}));
  EXPECT_DOUBLE_EQ(ds.X(1, 1), 10.0);
  EXPECT_DOUBLE_EQ(ds.y(0), 1.2);
}

TEST(Csv, NonNumericCellReportsRowAndColumn) {
  std::string text = "timestamp,f1,f2,PUE\n";
  for (int i = 1; i <= 6; ++i) {
    text += "2024-01-01T0" + std::to_string(i) + ":00:00,1," + (i == 5 ? std::string("oops") : "2") + ",1.1\n";
  }
  try {
    parse(text);
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.row(), 5u);
    EXPECT_EQ(e.column(), "f2");
    EXPECT_NE(std::string(e.what()).find("row 5"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'f2'"), std::string::npos);
  }
}

TEST(Csv, MissingTargetColumn) {
  const std::string text = "timestamp,f1\n2024-01-01T00:00:00,1\n";
  try {
    parse(text);
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.column(), "PUE");
    EXPECT_NE(std::string(e.what()).find("target"), std::string::npos);
  }
  const Dataset ds = parse(text, TargetColumn::Optional);
  EXPECT_EQ(ds.n_samples(), 1u);
  EXPECT_TRUE(std::isnan(ds.y(0)));
}

TEST(Csv, RaggedRowAndDuplicateName) {
  EXPECT_THROW(parse("timestamp,f1,PUE\n2024-01-01T00:00:00,1\n"), CsvError);
  try {
    parse("timestamp,f1,f1,PUE\n");
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.column(), "f1");
  }
}

TEST(Csv, RejectsNonIncreasingTimestamps) {
  EXPECT_THROW(parse("timestamp,f1,PUE\n2024-01-01T00:10:00,1,1.1\n2024-01-01T00:00:00,1,1.1\n"), CsvError);
}

TEST(Csv, WriteParseRoundTrip) {
  const Dataset ds = generate_synthetic({50, 4, 3, 9});
  std::stringstream buf;
  write_csv(ds, buf);
  const Dataset back = parse_csv(buf);
  EXPECT_EQ(back.feature_names, ds.feature_names);
  EXPECT_EQ(back.timestamps, ds.timestamps);
  EXPECT_EQ(back.X, ds.X);
  EXPECT_EQ(back.y, ds.y);
}

TEST(Normalizer, ColumnMinMax) {
  Eigen::MatrixXd X(3, 2);
  X << 2, -1.5, 4, 7.25, 6, 0.5;
  const auto p = fit_normalizer(make_dataset(X, Eigen::Vector3d(1.1, 1.4, 1.2)));
  EXPECT_EQ(p.feature_min(0), 2.0);
  EXPECT_EQ(p.feature_max(0), 6.0);
  EXPECT_EQ(p.feature_min(1), -1.5);
  EXPECT_EQ(p.feature_max(1), 7.25);
  EXPECT_EQ(p.target_min, 1.1);
  EXPECT_EQ(p.target_max, 1.4);
}

TEST(Normalizer, ConstantColumnMapsToZero) {
  Eigen::MatrixXd X(3, 1);
  X << 5, 5, 5;
  const Dataset ds = make_dataset(X, Eigen::Vector3d(1.0, 2.0, 3.0));
  const auto p = fit_normalizer(ds);
  EXPECT_TRUE(p.is_constant(0));
  const Dataset n = normalize(ds, p);
  EXPECT_EQ(n.X.col(0), Eigen::Vector3d::Zero());
}

TEST(Normalizer, EndpointsAndMidpoint) {
  Eigen::MatrixXd X(3, 1);
  X << 2, 4, 6;
  const auto p = fit_normalizer(make_dataset(X, Eigen::Vector3d(1.0, 1.5, 2.0)));
  Eigen::MatrixXd probe(3, 1);
  probe << 2, 6, 4;
  const Dataset n = normalize(make_dataset(probe, Eigen::Vector3d(1.0, 2.0, 1.5)), p);
  EXPECT_EQ(n.X(0, 0), 0.0);
  EXPECT_EQ(n.X(1, 0), 1.0);
  EXPECT_EQ(n.X(2, 0), 0.5);
  EXPECT_EQ(n.y(2), 0.5);
}

TEST(Normalizer, TestRowsMayLeaveUnitInterval) {
  const Dataset ds = ramp(10);
  auto [train, test] = split_chronological(ds, 0.8);
  const auto p = fit_normalizer(train);
  const Dataset n = normalize(test, p);
  EXPECT_GT(n.X(1, 0), 1.0);
  EXPECT_GT(n.y(1), 1.0);
}

TEST(Normalizer, RoundTripAndArgExtremes) {
  const Dataset ds = generate_synthetic({300, 5, 4, 11});
  const auto p = fit_normalizer(ds);
  const Dataset n = normalize(ds, p);
  const Dataset back = denormalize(n, p);
  EXPECT_LE((back.X - ds.X).cwiseAbs().maxCoeff() / ds.X.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((back.y - ds.y).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index j = 0; j < ds.X.cols(); ++j) {
    Eigen::Index a, b;
    ds.X.col(j).maxCoeff(&a);
    n.X.col(j).maxCoeff(&b);
    EXPECT_EQ(a, b);
    ds.X.col(j).minCoeff(&a);
    n.X.col(j).minCoeff(&b);
    EXPECT_EQ(a, b);
    EXPECT_GE(n.X.col(j).minCoeff(), 0.0);
    EXPECT_LE(n.X.col(j).maxCoeff(), 1.0);
  }
}

TEST(Normalizer, FeatureNameMismatch) {
  const Dataset ds = ramp(5, 2);
  auto p = fit_normalizer(ds);
  p.feature_names[1] = "other";
  EXPECT_THROW(normalize(ds, p), InvalidArgument);
}

TEST(Normalizer, TargetRoundTrip) {
  NormalizationParams p;
  p.target_min = 1.07;
  p.target_max = 1.93;
  EXPECT_EQ(denormalize_target(Eigen::VectorXd::Zero(1), p)(0), 1.07);
  EXPECT_EQ(denormalize_target(Eigen::VectorXd::Ones(1), p)(0), 1.93);
  const Eigen::VectorXd v = Eigen::VectorXd::Random(500);
  EXPECT_LE((normalize_target(denormalize_target(v, p), p) - v).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Window, FullLengthWindow) {
  const Dataset ds = ramp(5);
  const WindowedSet ws = window(ds, 5);
  ASSERT_EQ(ws.size(), 1u);
  EXPECT_EQ(ws.targets(0), ds.y(4));
}

TEST(Window, UnitWindow) {
  const Dataset ds = ramp(5);
  const WindowedSet ws = window(ds, 1);
  ASSERT_EQ(ws.size(), 5u);
  EXPECT_EQ(ws.targets, ds.y);
}

TEST(Window, IndexArithmetic) {
  const Dataset ds = ramp(10, 2);
  const WindowedSet ws = window(ds, 4);
  ASSERT_EQ(ws.size(), 7u);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(ws.step(2, t)[j], ds.X(static_cast<Eigen::Index>(2 + t), static_cast<Eigen::Index>(j)));
    }
  }
  EXPECT_EQ(ws.targets(2), ds.y(5));
}

TEST(Window, LastRowsReproduceTail) {
  const Dataset ds = generate_synthetic({40, 3, 2, 5});
  const std::size_t w = 6;
  const WindowedSet ws = window(ds, w);
  for (std::size_t k = 0; k < ws.size(); ++k) {
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
      EXPECT_EQ(ws.step(k, w - 1)[j], ds.X(static_cast<Eigen::Index>(k + w - 1), static_cast<Eigen::Index>(j)));
    }
  }
}

TEST(Window, TooLong) { EXPECT_THROW(window(ramp(5), 6), InvalidArgument); }

TEST(Split, FloorRule) {
  const Dataset ds = ramp(10);
  auto [a, b] = split_chronological(ds, 0.8);
  EXPECT_EQ(a.n_samples(), 8u);
  EXPECT_EQ(b.n_samples(), 2u);
  EXPECT_EQ(b.X(0, 0), ds.X(8, 0));
  auto [c, d] = split_chronological(ds, 0.95);
  EXPECT_EQ(c.n_samples(), 9u);
  EXPECT_EQ(d.n_samples(), 1u);
}

TEST(Split, EmptyPartitionForWindow) {
  const Dataset ds = ramp(10);
  EXPECT_THROW(split_chronological(ds, 0.05, 2), InvalidArgument);
  EXPECT_THROW(split_chronological(ds, 0.05), InvalidArgument);
  EXPECT_THROW(split_chronological(ds, 1.0), InvalidArgument);
}

TEST(Synthetic, Deterministic) {
  const Dataset a = generate_synthetic({100, 3, 0, 42});
  const Dataset b = generate_synthetic({100, 3, 0, 42});
  EXPECT_EQ(a.X, b.X);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.timestamps, b.timestamps);
  const Dataset c = generate_synthetic({100, 3, 0, 43});
  EXPECT_NE(a.y, c.y);
}

TEST(Synthetic, ShapeAndNames) {
  const Dataset ds = generate_synthetic({});
  EXPECT_EQ(ds.n_samples(), 5000u);
  EXPECT_EQ(ds.n_features(), 32u);
  EXPECT_EQ(ds.feature_names.front(), "it_power_kw");
  EXPECT_EQ(ds.feature_names[3], "aux_load_01_kw");
  EXPECT_EQ(ds.feature_names.back(), "sensor_024");
  EXPECT_NO_THROW(ds.validate());
}

TEST(Synthetic, PueAtLeastOne) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset ds = generate_synthetic({3000, 8, 2, seed});
    EXPECT_GE(ds.y.minCoeff(), 1.0);
    EXPECT_LE(ds.y.maxCoeff(), 2.0);
  }
}

TEST(Synthetic, NoiseChannelsLeaveInformativeUnchanged) {
  const Dataset a = generate_synthetic({200, 6, 0, 4});
  const Dataset b = generate_synthetic({200, 6, 10, 4});
  EXPECT_EQ(a.X, b.X.leftCols(6));
  EXPECT_EQ(a.y, b.y);
}

TEST(Synthetic, InformativeChannelsOutrankNoise) {
  const Dataset ds = generate_synthetic({2000, 5, 15, 7});
  double max_noise = 0.0;
  for (Eigen::Index j = 5; j < 20; ++j) max_noise = std::max(max_noise, std::abs(pearson(ds.X.col(j), ds.y)));
  for (Eigen::Index j = 0; j < 5; ++j) {
    EXPECT_GT(std::abs(pearson(ds.X.col(j), ds.y)), max_noise) << ds.feature_names[static_cast<std::size_t>(j)];
  }
}

TEST(Synthetic, RejectsBadSpec) {
  EXPECT_THROW(generate_synthetic({0, 3, 0, 1}), InvalidArgument);
  EXPECT_THROW(generate_synthetic({10, 2, 0, 1}), InvalidArgument);
}

}  // namespace
}  // namespace pue
