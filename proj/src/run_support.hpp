// Copyright 2026 The qpush Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#pragma once

// Shared setup for the gossip and optimization run drivers.

#include "qpush/config.hpp"
#include "qpush/graph.hpp"
#include "qpush/quantizer.hpp"

#include <json.hpp>

#include <optional>

namespace qpush::detail {

struct Network {
  DirectedGraph graph;
  ColumnStochasticMatrix mixing;
  SpectralProfile profile;
};

// Unknown presets surface as ConfigInvalid("graph").
DirectedGraph topology_from_config(const ExperimentConfig& cfg);
Network build_network(const ExperimentConfig& cfg);
QuantizerSpec quantizer_from_config(const ExperimentConfig& cfg);

// Bounds are left uncomputed when the mixing rate could not be fitted.
TheoryBounds bounds_or_empty(const SpectralProfile& sp, std::size_t n, double d_sq);

// Verdict block for the metadata sidecar. With enforcement on, omega^2 >= 1
// is rejected as ConfigInvalid and an inadmissible omega prints a warning.
nlohmann::json admissibility(const ExperimentConfig& cfg, double omega_sq_value,
                             std::optional<double> omega_max, const char* threshold_name);

// States whose magnitude passes this are treated as numerically diverged.
inline constexpr double kDivergenceLimit = 1e100;

}  // namespace qpush::detail
