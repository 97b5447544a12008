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
#include "qpush/objective.hpp"
#include "qpush/push_sum.hpp"
#include "qpush/trace.hpp"

#include <vector>

namespace qpush {

struct OptNodeState : PushSumCore {
  Vector w;           // mixed value before the gradient step
  Vector z;           // w / y
  Vector z_time_avg;  // running mean of z over completed rounds
  std::size_t averaged_rounds = 0;
};

// Every node starts at `start` with zero replicas and y = 1.
std::vector<OptNodeState> init_optimizer(const DirectedGraph& g, const Vector& start);

struct SgdRoundResult {
  std::vector<OptNodeState> states;
  std::uint64_t bits = 0;
  double residual_u = 0.0;  // ||X(t) - X_hat(t+1)||_F^2
  Vector gradient_sum;      // sum_i of the stochastic gradients applied this round
};

/// One synchronous round of quantized decentralized SGD. The exchange is the
/// gossip exchange; then w is the mixed value, z = w / y, the gradient is
/// drawn at z (or at w for GradientPoint::kUnscaled) and x = w - alpha * g.
SgdRoundResult sgd_round(const std::vector<OptNodeState>& states, const ColumnStochasticMatrix& a,
                         const QuantizerSpec& spec, double alpha, const ObjectiveSet& objectives,
                         const RoundContext& ctx,
                         GradientPoint point = GradientPoint::kScaled);

// sqrt(n) / (8 L sqrt(T)) for convex runs, sqrt(n) / (L sqrt(T)) otherwise.
double default_step_size(Mode mode, std::size_t n, double lipschitz, std::size_t rounds);

/// CSV columns: round, gap_node1_avg, cons_err_max, grad_norm_sq, residual_u,
/// cum_bits. gap_node1_avg is f(running average of z_1) - f*, or the plain
/// loss when f* is unknown. Diagnostics: mass_identity_residual, y_sum_dev,
/// y_min.
MetricsTrace run_optimization(const ExperimentConfig& cfg);

// Same with a caller-supplied problem; its size must match the graph.
MetricsTrace run_optimization(const ExperimentConfig& cfg, const ObjectiveSet& objectives);

}  // namespace qpush
