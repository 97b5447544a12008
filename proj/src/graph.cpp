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

#include "qpush/graph.hpp"

#include "qpush/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace qpush {

namespace {

std::vector<bool> reachable(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

std::size_t parse_count(std::string_view text, std::string_view preset) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw std::invalid_argument("bad node count in graph preset '" + std::string(preset) + "'");
  }
  return value;
}

}  // namespace

bool is_strongly_connected(std::size_t n, const std::vector<Edge>& edges) {
  if (n == 0) return false;
  std::vector<std::vector<std::size_t>> fwd(n), rev(n);
  for (const Edge& e : edges) {
    fwd[e.src].push_back(e.dst);
    rev[e.dst].push_back(e.src);
  }
  const auto a = reachable(n, fwd);
  const auto b = reachable(n, rev);
  return std::all_of(a.begin(), a.end(), [](bool v) { return v; }) &&
         std::all_of(b.begin(), b.end(), [](bool v) { return v; });
}

DirectedGraph::DirectedGraph(std::size_t n, std::vector<Edge> edges) : n_(n), in_(n), out_(n) {
  if (n == 0) throw std::invalid_argument("graph needs at least one node");
  for (const Edge& e : edges) {
    if (e.src >= n || e.dst >= n) {
      throw std::invalid_argument("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                                  " references a node outside [0, " + std::to_string(n) + ")");
    }
  }
  std::erase_if(edges, [](const Edge& e) { return e.src == e.dst; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (!is_strongly_connected(n, edges)) {
    throw NotStronglyConnected("graph with " + std::to_string(n) +
                               " nodes is not strongly connected");
  }
  edges_ = std::move(edges);
  for (const Edge& e : edges_) {
    out_[e.src].push_back(e.dst);
    in_[e.dst].push_back(e.src);
  }
  for (auto& v : in_) std::sort(v.begin(), v.end());
  for (auto& v : out_) std::sort(v.begin(), v.end());
}

DirectedGraph ring_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return DirectedGraph(n, std::move(edges));
}

DirectedGraph complete_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) edges.push_back({i, j});
    }
  }
  return DirectedGraph(n, std::move(edges));
}

DirectedGraph g1_graph() {
  constexpr std::size_t n = 10;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  edges.push_back({1, 0});
  edges.push_back({6, 5});
  return DirectedGraph(n, std::move(edges));
}

DirectedGraph g2_graph() {
  constexpr std::size_t n = 10;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.push_back({i, (i + 1) % n});
    edges.push_back({(i + 1) % n, i});
  }
  edges.push_back({1, 6});
  edges.push_back({4, 9});
  return DirectedGraph(n, std::move(edges));
}

DirectedGraph read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::size_t max_id = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long src = 0, dst = 0;
    if (!(fields >> src)) continue;
    if (!(fields >> dst) || src < 0 || dst < 0) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                  ": expected two non-negative node ids");
    }
    std::string rest;
    if (fields >> rest) {
      throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                  ": trailing tokens");
    }
    edges.push_back({static_cast<std::size_t>(src), static_cast<std::size_t>(dst)});
    max_id = std::max({max_id, edges.back().src, edges.back().dst});
    any = true;
  }
  if (!any) throw std::invalid_argument("edge list is empty");
  return DirectedGraph(max_id + 1, std::move(edges));
}

DirectedGraph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

DirectedGraph build_topology(std::string_view preset) {
  if (preset == "g1") return g1_graph();
  if (preset == "g2") return g2_graph();
  const auto colon = preset.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("unknown graph preset '" + std::string(preset) + "'");
  }
  const auto kind = preset.substr(0, colon);
  const auto arg = preset.substr(colon + 1);
  if (kind == "ring") return ring_graph(parse_count(arg, preset));
  if (kind == "complete") return complete_graph(parse_count(arg, preset));
  if (kind == "custom") return read_edge_list_file(std::string(arg));
  throw std::invalid_argument("unknown graph preset '" + std::string(preset) + "'");
}

ColumnStochasticMatrix::ColumnStochasticMatrix(Eigen::MatrixXd weights)
    : weights_(std::move(weights)) {
  if (weights_.rows() == 0 || weights_.rows() != weights_.cols()) {
    throw InvalidMatrix("mixing matrix must be square and non-empty");
  }
  for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
    if (!(weights_(j, j) > 0.0)) {
      throw InvalidMatrix("diagonal entry " + std::to_string(j) + " is not positive");
    }
    if ((weights_.col(j).array() < 0.0).any()) {
      throw InvalidMatrix("column " + std::to_string(j) + " has a negative entry");
    }
    if (std::abs(weights_.col(j).sum() - 1.0) > 1e-12) {
      throw InvalidMatrix("column " + std::to_string(j) + " does not sum to one");
    }
  }
}

ColumnStochasticMatrix out_degree_weight_matrix(const DirectedGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = 1.0 / static_cast<double>(g.out_degree(j));
    const auto col = static_cast<Eigen::Index>(j);
    a(col, col) = w;
    for (std::size_t i : g.out_neighbors(j)) a(static_cast<Eigen::Index>(i), col) = w;
  }
  return ColumnStochasticMatrix(std::move(a));
}

std::vector<double> mixing_deviation_norms(const ColumnStochasticMatrix& a,
                                           const Eigen::VectorXd& phi, std::size_t horizon) {
  const Eigen::MatrixXd& m = a.dense();
  const Eigen::MatrixXd limit = phi * Eigen::RowVectorXd::Ones(m.cols());
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  std::vector<double> norms;
  norms.reserve(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t) {
    if (t > 0) power = m * power;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(power - limit);
    norms.push_back(svd.singularValues()(0));
  }
  return norms;
}

SpectralProfile estimate_spectral_profile(const ColumnStochasticMatrix& a, std::size_t horizon,
                                          double tol) {
  const std::size_t n = a.size();
  if (horizon < 2 * n) throw std::invalid_argument("spectral horizon must be at least 2n");
  if (!(tol > 0.0)) throw std::invalid_argument("power iteration tolerance must be positive");
  const Eigen::MatrixXd& m = a.dense();

  SpectralProfile sp;
  sp.horizon = horizon;

  // Power iteration from the uniform vector; column stochasticity keeps the
  // iterate on the simplex, the renormalisation only removes rounding drift.
  Eigen::VectorXd phi = Eigen::VectorXd::Constant(m.rows(), 1.0 / static_cast<double>(n));
  const std::size_t max_steps = 10 * horizon;
  bool converged = (n == 1);
  for (std::size_t k = 0; k < max_steps && !converged; ++k) {
    Eigen::VectorXd next = m * phi;
    next /= next.sum();
    const double step = (next - phi).norm();
    phi = std::move(next);
    sp.power_iterations = k + 1;
    converged = step <= tol;
  }
  if (!converged) {
    throw NoConvergence("power iteration did not reach tolerance within " +
                        std::to_string(max_steps) + " steps");
  }
  sp.phi = phi;

  const auto norms = mixing_deviation_norms(a, phi, horizon);

  // Least-squares line through (t, log norm_t) for t = 1..horizon.
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t count = 0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    if (norms[t] < 1e-14) continue;
    const double x = static_cast<double>(t);
    const double y = std::log(norms[t]);
    st += x;
    sy += y;
    stt += x * x;
    sty += x * y;
    ++count;
  }
  if (count >= 2) {
    const double k = static_cast<double>(count);
    const double slope = (k * sty - st * sy) / (k * stt - st * st);
    const double intercept = (sy - slope * st) / k;
    const double lambda = std::exp(slope);
    if (!(lambda < 1.0)) {
      throw NoConvergence("fitted mixing rate " + std::to_string(lambda) + " does not contract");
    }
    double c = std::exp(intercept);
    for (std::size_t t = 0; t <= horizon; ++t) {
      c = std::max(c, norms[t] / std::pow(lambda, static_cast<double>(t)));
    }
    sp.lambda_est = lambda;
    sp.c_est = 1.05 * c;
    sp.rate_fitted = true;
  } else {
    sp.lambda_est = 0.0;
    sp.c_est = 1.05 * std::max(norms[0], 1e-300);
    sp.rate_fitted = false;
  }

  // [A^t 1]_i tends to n phi_i, so the limit joins the finite-horizon minimum.
  Eigen::VectorXd ones_power = Eigen::VectorXd::Ones(m.rows());
  double floor = static_cast<double>(n) * phi.minCoeff();
  for (std::size_t t = 1; t <= horizon; ++t) {
    ones_power = m * ones_power;
    floor = std::min(floor, ones_power.minCoeff());
  }
  sp.delta_est = 0.99 * floor;

  const Eigen::MatrixXd shifted = m - Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(shifted);
  sp.gamma = svd.singularValues()(0);
  return sp;
}

TheoryBounds theory_bounds(const SpectralProfile& sp, std::size_t n, double d_sq, bool enabled) {
  TheoryBounds tb;
  if (!enabled) return tb;
  const double lambda = sp.lambda_est;
  if (!(lambda > 0.0) || lambda >= 1.0 - 1e-9) {
    throw DegenerateSpectrum("mixing rate " + std::to_string(lambda) +
                             " is outside (0, 1 - 1e-9); admissibility thresholds are undefined");
  }
  const double c = sp.c_est;
  const double gamma = sp.gamma;
  const double mix = 1.0 + 6.0 * c * c / ((1.0 - lambda) * (1.0 - lambda));
  tb.lambda_tilde_1 =
      1.0 / (2.0 / std::sqrt(lambda) + 4.0 * c / (lambda - std::pow(lambda, 1.5)));
  tb.lambda_tilde_2 = 1.0 / std::sqrt(mix);
  tb.xi = 6.0 * static_cast<double>(n) * d_sq * (1.0 + gamma * gamma) * mix;
  tb.omega_max_gossip = tb.lambda_tilde_1 / (1.0 + gamma);
  tb.omega_max_opt = tb.lambda_tilde_2 / std::sqrt(6.0 * (1.0 + gamma * gamma));
  tb.computed = true;
  return tb;
}

}  // namespace qpush
