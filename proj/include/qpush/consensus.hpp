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
#include "qpush/graph.hpp"
#include "qpush/push_sum.hpp"
#include "qpush/trace.hpp"

#include <vector>

namespace qpush {

struct GossipNodeState : PushSumCore {
  Vector z;  // x / y
};

// x = x_init rows, every x_hat replica zero, y = 1, z = x.
// Throws DimensionMismatch if x_init is not n rows of width d.
std::vector<GossipNodeState> init_gossip(const DirectedGraph& g, const std::vector<Vector>& x_init,
                                         std::size_t d);

struct GossipRoundResult {
  std::vector<GossipNodeState> states;
  std::uint64_t bits = 0;    // summed over channels, self-loops excluded
  double residual_u = 0.0;   // ||X(t) - X_hat(t+1)||_F
};

/// One synchronous round of quantized push-sum gossip. Every node reads only
/// round-t values from `states`; the result holds round t+1.
GossipRoundResult gossip_round(const std::vector<GossipNodeState>& states,
                               const ColumnStochasticMatrix& a, const QuantizerSpec& spec,
                               const RoundContext& ctx);

// n rows of i.i.d. Uniform[0,1]^d values, one stream per node.
std::vector<Vector> uniform01_init(std::size_t n, std::size_t d, std::uint64_t seed);

/// CSV columns: round, max_err, mean_err, residual_u, mass_drift, cum_bits.
/// Diagnostics: y_sum_dev, y_min. Row t describes the state after round t.
MetricsTrace run_gossip(const ExperimentConfig& cfg);

// Same as above with an explicit initial matrix (rows = nodes).
MetricsTrace run_gossip(const ExperimentConfig& cfg, const std::vector<Vector>& x_init);

}  // namespace qpush
