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

// Umbrella header.

#ifndef PUE_FORECAST_PUE_FORECAST_HPP_
#define PUE_FORECAST_PUE_FORECAST_HPP_

#include "pue_forecast/adam.hpp"
#include "pue_forecast/checkpoint.hpp"
#include "pue_forecast/dataset.hpp"
#include "pue_forecast/error.hpp"
#include "pue_forecast/gbt.hpp"
#include "pue_forecast/metrics.hpp"
#include "pue_forecast/rfecv.hpp"
#include "pue_forecast/rnn.hpp"
#include "pue_forecast/synthetic.hpp"
#include "pue_forecast/training.hpp"
#include "pue_forecast/tuning.hpp"

namespace pue {
inline constexpr std::string_view kVersion = "0.1.0";
}  // namespace pue

#endif  // PUE_FORECAST_PUE_FORECAST_HPP_
