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

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qpush {

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Strongly connected directed graph with an implicit self-loop on every
/// node. Self-loop edges passed to the constructor are dropped and duplicate
/// edges collapse, so `edges()` is the sorted set of channels between
/// distinct nodes.
class DirectedGraph {
 public:
  // Throws NotStronglyConnected, or std::invalid_argument on bad node ids.
  DirectedGraph(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  // Neighbor lists exclude the node itself; both are sorted.
  const std::vector<std::size_t>& in_neighbors(std::size_t i) const { return in_.at(i); }
  const std::vector<std::size_t>& out_neighbors(std::size_t i) const { return out_.at(i); }

  // Counts the self-loop, so it is always >= 1.
  std::size_t out_degree(std::size_t i) const { return out_.at(i).size() + 1; }
  std::size_t in_degree(std::size_t i) const { return in_.at(i).size() + 1; }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

bool is_strongly_connected(std::size_t n, const std::vector<Edge>& edges);

DirectedGraph ring_graph(std::size_t n);
DirectedGraph complete_graph(std::size_t n);
// 10-cycle 1->2->...->10->1 plus reverse arcs 2->1 and 7->6 (figure labels).
DirectedGraph g1_graph();
// Bidirected 10-cycle plus chords 2->7 and 5->10 (figure labels).
DirectedGraph g2_graph();

// One "src dst" pair per line, 0-indexed; '#' starts a comment.
// The node count is one past the largest id seen.
DirectedGraph read_edge_list(std::istream& in);
DirectedGraph read_edge_list_file(const std::string& path);

/// Resolves "ring:<n>", "complete:<n>", "g1", "g2" or "custom:<path>".
DirectedGraph build_topology(std::string_view preset);

/// Dense column-stochastic mixing matrix. Construction validates
/// non-negativity, strictly positive diagonal and unit column sums to 1e-12.
class ColumnStochasticMatrix {
 public:
  explicit ColumnStochasticMatrix(Eigen::MatrixXd weights);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  const Eigen::MatrixXd& dense() const noexcept { return weights_; }
  double operator()(std::size_t i, std::size_t j) const {
    return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Eigen::MatrixXd weights_;
};

// a_ij = 1 / d_j^out when j -> i is an edge or i == j.
ColumnStochasticMatrix out_degree_weight_matrix(const DirectedGraph& g);

/// Empirical push-sum constants of a mixing matrix.
struct SpectralProfile {
  Eigen::VectorXd phi;       // stochastic vector with A phi = phi
  double lambda_est = 0.0;   // fitted contraction rate, 0 when A mixes exactly
  double c_est = 0.0;        // prefactor: ||A^t - phi 1^T|| <= c_est * lambda_est^t
  double delta_est = 0.0;    // floor on [A^t 1]_i
  double gamma = 0.0;        // ||A - I||_2
  bool rate_fitted = false;  // false when fewer than two norms survive the 1e-14 cut
  std::size_t horizon = 0;
  std::size_t power_iterations = 0;
};

// Throws NoConvergence when power iteration does not settle within
// 10 * horizon steps. Requires horizon >= 2n and tol > 0.
SpectralProfile estimate_spectral_profile(const ColumnStochasticMatrix& a, std::size_t horizon,
                                          double tol);

// Operator 2-norm of A^t - phi 1^T for t = 0..horizon.
std::vector<double> mixing_deviation_norms(const ColumnStochasticMatrix& a,
                                           const Eigen::VectorXd& phi, std::size_t horizon);

/// Admissibility thresholds on the quantizer contraction factor omega.
struct TheoryBounds {
  bool computed = false;
  double lambda_tilde_1 = 0.0;
  double lambda_tilde_2 = 0.0;
  double xi = 0.0;
  double omega_max_gossip = 0.0;  // lambda_tilde_1 / (1 + gamma)
  double omega_max_opt = 0.0;     // lambda_tilde_2 / sqrt(6 (1 + gamma^2))
};

// With enabled == false nothing is evaluated and `computed` stays false.
// Throws DegenerateSpectrum unless 0 < lambda_est < 1 - 1e-9.
TheoryBounds theory_bounds(const SpectralProfile& sp, std::size_t n, double d_sq, bool enabled);

}  // namespace qpush
