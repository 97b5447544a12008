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

#include "qpush/config.hpp"
#include "qpush/trace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qpush {

/// Dispatches on cfg.mode, writes <out>/<stem>.csv and <out>/<stem>.meta.json
/// and returns the trace. In validate mode the rows are the oracle checks
/// (columns: check, passed, value, tolerance) and meta["passed"] is the verdict.
MetricsTrace run(const ExperimentConfig& cfg);

// Runs without touching the filesystem.
MetricsTrace simulate(const ExperimentConfig& cfg);

std::string to_csv(const MetricsTrace& trace);
void write_outputs(const MetricsTrace& trace, const ExperimentConfig& cfg);

struct BitsAtTarget {
  double target = 0.0;
  std::optional<std::uint64_t> quantized_bits;  // nullopt: target never reached
  std::optional<std::uint64_t> exact_bits;
  std::optional<double> ratio;                  // exact_bits / quantized_bits
};

// Relative error per row: max_err / initial_max_err for gossip traces,
// gap_node1_avg / initial_gap for optimization traces.
std::vector<double> relative_error(const MetricsTrace& trace);

std::vector<BitsAtTarget> bits_to_error(const MetricsTrace& quantized, const MetricsTrace& exact,
                                        const std::vector<double>& targets);

// Runs both configs first. Throws ConfigInvalid unless they differ only in
// quant, norm_bits, scalar_bits, name and out.
std::vector<BitsAtTarget> bits_to_error(const ExperimentConfig& quantized,
                                        const ExperimentConfig& exact,
                                        const std::vector<double>& targets);

std::string format_comparison(const std::vector<BitsAtTarget>& table);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool degenerate = false;  // constant data or fewer than two points
};

/// Least-squares fit of log(column) against the round column over rows
/// [first, last] (inclusive, 0-based). Throws NonPositiveValues when a value
/// in the window is not positive and finite.
RateFit rate_fit(const MetricsTrace& trace, std::string_view column, std::size_t first,
                 std::size_t last);

/// Rows [first, last] covering the second half of the stretch where values
/// stay at or above floor_fraction * values[0], i.e. before the float floor.
/// first == last when the stretch is shorter than two rows.
std::pair<std::size_t, std::size_t> decay_window(const std::vector<double>& values,
                                                 double floor_fraction = 1e-10);

// Same fit on raw (x, y) pairs.
RateFit log_linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qpush
