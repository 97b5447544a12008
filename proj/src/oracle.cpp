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

#include "qpush/oracle.hpp"

#include "qpush/consensus.hpp"
#include "qpush/optimizer.hpp"
#include "qpush/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qpush {

namespace {

// Reference stochastic rounding of one row: level r = |v| s / ||v|| is
// rounded up with probability r - floor(r), one uniform per entry.
Eigen::RowVectorXd reference_quantize(const Eigen::RowVectorXd& v, const QuantizerSpec& spec,
                                      Rng& rng) {
  if (spec.kind == QuantizerKind::kIdentity) return v;
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(v.size());
  double norm_sq = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) norm_sq += v(k) * v(k);
  const double norm = std::sqrt(norm_sq);
  if (norm == 0.0) return out;
  const double s = spec.levels;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    double whole = 0.0;
    double frac = std::modf(std::abs(v(k)) / norm * s, &whole);
    if (whole >= s) {
      whole = s;
      frac = 0.0;
    }
    const double level = rng.uniform() < frac ? whole + 1.0 : whole;
    out(k) = (v(k) < 0.0 ? -norm : norm) * (level / s);
  }
  return out;
}

Eigen::MatrixXd quantize_rows(const Eigen::MatrixXd& diff, const QuantizerSpec& spec,
                              std::uint64_t seed, std::size_t round) {
  Eigen::MatrixXd q(diff.rows(), diff.cols());
  for (Eigen::Index i = 0; i < diff.rows(); ++i) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i), round, StreamPurpose::kQuantize);
    q.row(i) = reference_quantize(diff.row(i), spec, rng);
  }
  return q;
}

// Plain triple loop with increasing source index; see the engine's exchange.
Eigen::MatrixXd mix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& x_hat) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, x_hat.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double coef = i == j ? A(i, j) - 1.0 : A(i, j);
      if (coef == 0.0) continue;
      for (Eigen::Index k = 0; k < x_hat.cols(); ++k) out(i, k) += coef * x_hat(j, k);
    }
  }
  return out;
}

Eigen::VectorXd mix_weights(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0) out(i) += A(i, j) * y(j);
    }
  }
  return out;
}

Eigen::MatrixXd to_matrix(const std::vector<Vector>& rows) {
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return m;
}

template <class Node>
double state_gap(const std::vector<Node>& nodes, const MatrixState& st) {
  double gap = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t k = 0; k < nodes[i].x.size(); ++k) {
      gap = std::max(gap, std::abs(nodes[i].x[k] - st.x(i, k)));
      gap = std::max(gap, std::abs(nodes[i].x_hat_self[k] - st.x_hat(i, k)));
    }
    gap = std::max(gap, std::abs(nodes[i].y - st.y(i)));
  }
  return gap;
}

}  // namespace

MatrixState matrix_initial_state(const Eigen::MatrixXd& x1) {
  MatrixState st;
  st.x = x1;
  st.w = x1;
  st.x_hat = Eigen::MatrixXd::Zero(x1.rows(), x1.cols());
  st.y = Eigen::VectorXd::Ones(x1.rows());
  st.round = 1;
  return st;
}

MatrixState matrix_gossip_step(const MatrixState& st, const ColumnStochasticMatrix& a,
                               const QuantizerSpec& spec, std::uint64_t seed) {
  const Eigen::MatrixXd& A = a.dense();
  MatrixState next;
  next.x_hat = st.x_hat + quantize_rows(st.x - st.x_hat, spec, seed, st.round);
  next.x = st.x + mix(A, next.x_hat);
  next.w = next.x;
  next.y = mix_weights(A, st.y);
  next.round = st.round + 1;
  return next;
}

MatrixState matrix_opt_step(const MatrixState& st, const ColumnStochasticMatrix& a,
                            const QuantizerSpec& spec, double alpha,
                            const ObjectiveSet& objectives, std::uint64_t seed) {
  const Eigen::MatrixXd& A = a.dense();
  MatrixState next;
  next.x_hat = st.x_hat + quantize_rows(st.x - st.x_hat, spec, seed, st.round);
  next.w = st.x + mix(A, next.x_hat);
  next.y = mix_weights(A, st.y);
  Eigen::MatrixXd grad(next.w.rows(), next.w.cols());
  for (Eigen::Index i = 0; i < next.w.rows(); ++i) {
    Vector row(static_cast<std::size_t>(next.w.cols()));
    for (Eigen::Index k = 0; k < next.w.cols(); ++k) row[k] = next.w(i, k) / next.y(i);
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i), st.round, StreamPurpose::kSample);
    const Vector g = objectives.local(static_cast<std::size_t>(i)).sample_gradient(row, rng);
    for (Eigen::Index k = 0; k < next.w.cols(); ++k) grad(i, k) = g[k];
  }
  next.x = next.w - alpha * grad;
  next.round = st.round + 1;
  return next;
}

Eigen::MatrixXd closed_form_pushsum(const ColumnStochasticMatrix& a, const Eigen::MatrixXd& x1,
                                    std::size_t t) {
  const Eigen::MatrixXd& A = a.dense();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  for (std::size_t k = 0; k < t; ++k) power = A * power;
  const Eigen::VectorXd weights = power * Eigen::VectorXd::Ones(A.rows());
  return weights.cwiseInverse().asDiagonal() * (power * x1);
}

double gossip_equivalence_gap(const std::string& graph, std::size_t d, const QuantizerSpec& spec,
                              std::uint64_t seed, std::size_t rounds) {
  const DirectedGraph g = build_topology(graph);
  const ColumnStochasticMatrix a = out_degree_weight_matrix(g);
  const std::vector<Vector> x1 = uniform01_init(g.size(), d, seed);
  std::vector<GossipNodeState> nodes = init_gossip(g, x1, d);
  MatrixState st = matrix_initial_state(to_matrix(x1));
  double gap = 0.0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    nodes = gossip_round(nodes, a, spec, RoundContext{seed, t, 50}).states;
    st = matrix_gossip_step(st, a, spec, seed);
    gap = std::max(gap, state_gap(nodes, st));
  }
  return gap;
}

double sgd_equivalence_gap(const std::string& graph, std::size_t d, const QuantizerSpec& spec,
                           std::uint64_t seed, std::size_t rounds, double alpha) {
  const DirectedGraph g = build_topology(graph);
  const ColumnStochasticMatrix a = out_degree_weight_matrix(g);
  const std::size_t n = g.size();
  const ObjectiveSet problem = make_objectives(
      "lsq:" + std::to_string(n) + "x10:" + std::to_string(d), n, seed);
  std::vector<OptNodeState> nodes = init_optimizer(g, problem.initial_point());
  MatrixState st = matrix_initial_state(
      to_matrix(std::vector<Vector>(n, problem.initial_point())));
  double gap = 0.0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    nodes = sgd_round(nodes, a, spec, alpha, problem, RoundContext{seed, t, 50}).states;
    st = matrix_opt_step(st, a, spec, alpha, problem, seed);
    gap = std::max(gap, state_gap(nodes, st));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) gap = std::max(gap, std::abs(nodes[i].w[k] - st.w(i, k)));
    }
  }
  return gap;
}

double closed_form_gap(const std::string& graph, std::size_t d, std::uint64_t seed,
                       std::size_t rounds) {
  const DirectedGraph g = build_topology(graph);
  const ColumnStochasticMatrix a = out_degree_weight_matrix(g);
  const std::vector<Vector> x1 = uniform01_init(g.size(), d, seed);
  const Eigen::MatrixXd x1m = to_matrix(x1);
  std::vector<GossipNodeState> nodes = init_gossip(g, x1, d);
  double gap = 0.0;
  for (std::size_t t = 1; t <= rounds; ++t) {
    nodes = gossip_round(nodes, a, QuantizerSpec::identity(), RoundContext{seed, t, 50}).states;
    const Eigen::MatrixXd expected = closed_form_pushsum(a, x1m, t);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (std::size_t k = 0; k < d; ++k) gap = std::max(gap, std::abs(nodes[i].z[k] - expected(i, k)));
    }
  }
  return gap;
}

namespace {

CheckResult at_most(std::string name, double value, double tolerance, std::string detail = {}) {
  return CheckResult{std::move(name), value <= tolerance, value, tolerance, std::move(detail)};
}

std::string format_case(const std::string& graph, std::size_t d, const QuantizerSpec& spec) {
  std::ostringstream os;
  os << graph << " d=" << d << " " << spec.to_string();
  return os.str();
}

}  // namespace

std::vector<CheckResult> run_validation_suite() {
  std::vector<CheckResult> out;
  constexpr std::uint64_t kSeed = 7;
  constexpr std::size_t kRounds = 100;
  constexpr double kEquivalenceTol = 1e-12;

  for (const std::string graph : {"ring:3", "g1"}) {
    for (std::size_t d : {1u, 8u, 64u}) {
      const QuantizerSpec spec = QuantizerSpec::stochastic(d >= 64 ? 16 : 4);
      const std::string tag = format_case(graph, d, spec);
      out.push_back(at_most("gossip engine vs matrix form, " + tag,
                            gossip_equivalence_gap(graph, d, spec, kSeed, kRounds), kEquivalenceTol));
      const double alpha = 0.02;
      out.push_back(at_most("sgd engine vs matrix form, " + tag,
                            sgd_equivalence_gap(graph, d, spec, kSeed, kRounds, alpha), kEquivalenceTol));
    }
  }

  for (const std::string graph : {"ring:3", "g1", "g2"}) {
    out.push_back(at_most("identity engine vs closed-form push-sum, " + graph + " d=8",
                          closed_form_gap(graph, 8, kSeed, kRounds), 1e-10));
  }

  {
    const DirectedGraph g = g1_graph();
    const ColumnStochasticMatrix a = out_degree_weight_matrix(g);
    const Eigen::MatrixXd x1 = to_matrix(uniform01_init(g.size(), 4, kSeed));
    const Eigen::MatrixXd z = closed_form_pushsum(a, x1, 300);
    const Eigen::RowVectorXd mean = x1.colwise().mean();
    const double gap = (z.rowwise() - mean).cwiseAbs().maxCoeff();
    out.push_back(at_most("closed-form push-sum on g1 reaches the average by t=300", gap, 1e-8));
  }

  {
    const DirectedGraph g = g1_graph();
    const ColumnStochasticMatrix a = out_degree_weight_matrix(g);
    MatrixState st = matrix_initial_state(to_matrix(uniform01_init(g.size(), 8, kSeed)));
    double gap = 0.0;
    for (std::size_t t = 1; t <= 20; ++t) {
      const Eigen::MatrixXd expected = a.dense() * st.x;
      st = matrix_gossip_step(st, a, QuantizerSpec::identity(), kSeed);
      gap = std::max(gap, (st.x - expected).cwiseAbs().maxCoeff());
    }
    out.push_back(at_most("lossless matrix step equals X <- A X", gap, 1e-12));
  }

  {
    const DirectedGraph g = g1_graph();
    const ColumnStochasticMatrix a = out_degree_weight_matrix(g);
    MatrixState st = matrix_initial_state(Eigen::MatrixXd::Zero(10, 8));
    for (std::size_t t = 1; t <= 50; ++t) st = matrix_gossip_step(st, a, QuantizerSpec::stochastic(4), kSeed);
    out.push_back(at_most("zero start stays at zero under quantization", st.x.cwiseAbs().maxCoeff(), 0.0));
  }

  {
    const DirectedGraph g = g1_graph();
    const ColumnStochasticMatrix a = out_degree_weight_matrix(g);
    const ObjectiveSet problem = make_objectives("lsq:10x10:8", 10, kSeed);
    MatrixState gossip = matrix_initial_state(to_matrix(uniform01_init(10, 8, kSeed)));
    MatrixState opt = gossip;
    double gap = 0.0;
    for (std::size_t t = 1; t <= 50; ++t) {
      gossip = matrix_gossip_step(gossip, a, QuantizerSpec::stochastic(4), kSeed);
      opt = matrix_opt_step(opt, a, QuantizerSpec::stochastic(4), 0.0, problem, kSeed);
      gap = std::max(gap, (gossip.x - opt.x).cwiseAbs().maxCoeff());
    }
    out.push_back(at_most("matrix SGD step with alpha=0 equals the gossip step", gap, 0.0));
  }
  return out;
}

}  // namespace qpush
