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

// Matrix-form reference recursions for both engines. Slow on purpose: every
// step works on whole n x d matrices and quantizes through its own code path,
// using the same per-(node, round) stream keying as the engines.

#include "qpush/graph.hpp"
#include "qpush/objective.hpp"
#include "qpush/quantizer.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace qpush {

struct MatrixState {
  Eigen::MatrixXd x;      // rows are nodes
  Eigen::MatrixXd x_hat;
  Eigen::MatrixXd w;
  Eigen::VectorXd y;
  std::size_t round = 1;  // index of the next step
};

// X_hat = 0, y = 1, W = X = x1.
MatrixState matrix_initial_state(const Eigen::MatrixXd& x1);

// Q = Q(X - X_hat) rowwise; X_hat += Q; X += (A - I) X_hat; y = A y.
MatrixState matrix_gossip_step(const MatrixState& st, const ColumnStochasticMatrix& a,
                               const QuantizerSpec& spec, std::uint64_t seed);

// W = X + (A - I) X_hat after the same quantization; y = A y;
// X = W - alpha * dF(Z) with Z = diag(y)^-1 W.
MatrixState matrix_opt_step(const MatrixState& st, const ColumnStochasticMatrix& a,
                            const QuantizerSpec& spec, double alpha,
                            const ObjectiveSet& objectives, std::uint64_t seed);

// Rows [A^t X1]_i / [A^t 1]_i; t >= 1.
Eigen::MatrixXd closed_form_pushsum(const ColumnStochasticMatrix& a, const Eigen::MatrixXd& x1,
                                    std::size_t t);

// Largest |engine - oracle| entry over x, x_hat and y across `rounds` rounds.
double gossip_equivalence_gap(const std::string& graph, std::size_t d, const QuantizerSpec& spec,
                              std::uint64_t seed, std::size_t rounds);
// Same for the optimizer on the least-squares preset lsq:<n>x10:<d>; also
// compares w.
double sgd_equivalence_gap(const std::string& graph, std::size_t d, const QuantizerSpec& spec,
                           std::uint64_t seed, std::size_t rounds, double alpha);
// Largest |z_engine - closed form| over t = 1..rounds with the identity quantizer.
double closed_form_gap(const std::string& graph, std::size_t d, std::uint64_t seed,
                       std::size_t rounds);

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

std::vector<CheckResult> run_validation_suite();

}  // namespace qpush
