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

#ifndef PUE_FORECAST_ERROR_HPP_
#define PUE_FORECAST_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace pue {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or argument violation (bad dimensions, out-of-range options).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed tabular input. `row` is the 1-based data row (the header is row 0).
class CsvError : public Error {
 public:
  CsvError(std::string message, std::size_t row, std::string column)
      : Error(std::move(message)), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string message, int epoch, double last_finite_loss)
      : Error(std::move(message)), epoch_(epoch), last_finite_loss_(last_finite_loss) {}

  int epoch() const noexcept { return epoch_; }
  double last_finite_loss() const noexcept { return last_finite_loss_; }

 private:
  int epoch_;
  double last_finite_loss_;
};

// Checkpoint or report (de)serialization failure.
class FormatError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace pue

#endif  // PUE_FORECAST_ERROR_HPP_
