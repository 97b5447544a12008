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

#include "qpush/consensus.hpp"
#include "qpush/errors.hpp"
#include "qpush/optimizer.hpp"
#include "qpush/oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace qpush;

namespace {

ExperimentConfig convex_config(const std::string& graph, const std::string& quant,
                               const std::string& objective, std::size_t rounds) {
  ExperimentConfig cfg;
  cfg.mode = Mode::kConvex;
  cfg.graph = graph;
  cfg.quantizer = quant;
  cfg.objective = objective;
  cfg.rounds = rounds;
  return cfg;
}

}  // namespace

TEST_CASE("zero step size reduces to gossip") {
  const DirectedGraph g = g1_graph();
  const auto a = out_degree_weight_matrix(g);
  const ObjectiveSet problem = make_objectives("lsq:10x4:6", 10, 2);
  const auto init = uniform01_init(10, 6, 2);
  auto gossip = init_gossip(g, init, 6);
  auto opt = init_optimizer(g, Vector(6, 0.0));
  for (std::size_t i = 0; i < 10; ++i) {
    opt[i].x = init[i];
    opt[i].w = init[i];
  }
  const QuantizerSpec spec = QuantizerSpec::stochastic(4);
  for (std::size_t t = 1; t <= 40; ++t) {
    gossip = gossip_round(gossip, a, spec, RoundContext{2, t, 10}).states;
    opt = sgd_round(opt, a, spec, 0.0, problem, RoundContext{2, t, 10}).states;
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(opt[i].x == gossip[i].x);
      CHECK(opt[i].y == gossip[i].y);
    }
  }
}

TEST_CASE("single node is plain SGD") {
  const DirectedGraph g(1, {});
  const auto a = out_degree_weight_matrix(g);
  const ObjectiveSet problem = make_least_squares({{{1.0, 2.0}, {3.0, -2.0}, {0.5, 0.5}}});
  auto states = init_optimizer(g, problem.initial_point());
  Vector x = problem.initial_point();
  const double alpha = 0.1;
  for (std::size_t t = 1; t <= 30; ++t) {
    states = sgd_round(states, a, QuantizerSpec::identity(), alpha, problem, RoundContext{5, t, 1}).states;
    Rng rng = make_stream(5, 0, t, StreamPurpose::kSample);
    const Vector grad = problem.local(0).sample_gradient(x, rng);
    for (std::size_t k = 0; k < 2; ++k) x[k] -= alpha * grad[k];
    CHECK(states[0].x == x);
    CHECK(states[0].y == 1.0);
    CHECK(states[0].z == states[0].w);
  }
}

TEST_CASE("two lossless rounds on ring(3) match the matrix recursion") {
  const DirectedGraph g = ring_graph(3);
  const auto a = out_degree_weight_matrix(g);
  const ObjectiveSet problem = make_objectives("lsq:3x10:4", 3, 11);
  auto states = init_optimizer(g, problem.initial_point());
  MatrixState st = matrix_initial_state(Eigen::MatrixXd::Zero(3, 4));
  for (std::size_t t = 1; t <= 2; ++t) {
    states = sgd_round(states, a, QuantizerSpec::identity(), 0.05, problem, RoundContext{11, t, 1}).states;
    st = matrix_opt_step(st, a, QuantizerSpec::identity(), 0.05, problem, 11);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(states[i].x[k] - st.x(i, k)) <= 1e-12);
  }
}

TEST_CASE("running average of z") {
  const DirectedGraph g = g1_graph();
  const auto a = out_degree_weight_matrix(g);
  const ObjectiveSet problem = make_objectives("lsq:10x10:3", 10, 4);
  auto states = init_optimizer(g, problem.initial_point());
  std::vector<Vector> sums(10, Vector(3, 0.0));
  constexpr std::size_t kRounds = 300;
  for (std::size_t t = 1; t <= kRounds; ++t) {
    states = sgd_round(states, a, QuantizerSpec::stochastic(8), 0.02, problem, RoundContext{4, t, 50}).states;
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(states[i].y > 0.0);
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(states[i].z[k] == states[i].w[k] / states[i].y);
        sums[i][k] += states[i].z[k];
      }
    }
  }
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(states[i].averaged_rounds == kRounds);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(std::abs(states[i].z_time_avg[k] - sums[i][k] / kRounds) <= 1e-10);
    }
  }
}

TEST_CASE("mass identity with gradients and weight invariants") {
  for (const char* quant : {"identity", "levels:16"}) {
    CAPTURE(quant);
    const MetricsTrace tr = run_optimization(convex_config("g1", quant, "lsq:10x10:32", 400));
    for (double r : tr.diagnostic("mass_identity_residual")) CHECK(r <= 1e-9);
    for (double d : tr.diagnostic("y_sum_dev")) CHECK(d <= 1e-9);
    for (double y : tr.diagnostic("y_min")) CHECK(y > 0.0);
    const auto bits = tr.column("cum_bits");
    for (std::size_t t = 1; t < bits.size(); ++t) CHECK(bits[t] >= bits[t - 1]);
    CHECK(tr.rows.size() == 400);
  }
}

TEST_CASE("default step sizes") {
  CHECK(default_step_size(Mode::kConvex, 16, 2.0, 64) == doctest::Approx(4.0 / (8.0 * 2.0 * 8.0)));
  CHECK(default_step_size(Mode::kNonconvex, 16, 2.0, 64) == doctest::Approx(4.0 / (2.0 * 8.0)));
  const MetricsTrace tr = run_optimization(convex_config("g1", "identity", "lsq:10x10:8", 100));
  CHECK(tr.meta["alpha"].get<double>() == doctest::Approx(std::sqrt(10.0) / (8.0 * 10.0)));
}

TEST_CASE("near-lossless quantization tracks exact communication") {
  const auto exact = run_optimization(convex_config("g1", "identity", "lsq:10x10:32", 1024));
  const auto fine = run_optimization(convex_config("g1", "levels:256", "lsq:10x10:32", 1024));
  const double a = exact.rows.back()[1], b = fine.rows.back()[1];
  CHECK(std::abs(a - b) <= 0.1 * a);
}

TEST_CASE("identical local data drives every node to the shared optimum") {
  // Relative to the initial gap; the constant step leaves an absolute
  // stochastic floor near 1e-2 on this problem.
  auto data = synthetic_least_squares_data(10, 10, 32, 1);
  const ObjectiveSet problem = make_least_squares(std::vector<std::vector<Vector>>(10, data[0]));
  const DirectedGraph g = g1_graph();
  const auto a = out_degree_weight_matrix(g);
  auto states = init_optimizer(g, problem.initial_point());
  constexpr std::size_t kRounds = 4096;
  const double alpha = default_step_size(Mode::kConvex, 10, 1.0, kRounds);
  for (std::size_t t = 1; t <= kRounds; ++t) {
    states = sgd_round(states, a, QuantizerSpec::stochastic(16), alpha, problem, RoundContext{1, t, 50}).states;
  }
  const double f_star = *problem.optimal_value();
  const double initial_gap = problem.loss(problem.initial_point()) - f_star;
  for (const auto& s : states) CHECK(problem.loss(s.z) - f_star <= 1e-3 * initial_gap);
}

TEST_CASE("evaluating gradients at w instead of z is worse on an unbalanced graph") {
  ExperimentConfig cfg = convex_config("g1", "levels:16", "lsq:10x10:32", 1024);
  const double scaled = run_optimization(cfg).rows.back()[1];
  cfg.gradient_point = GradientPoint::kUnscaled;
  const double unscaled = run_optimization(cfg).rows.back()[1];
  CHECK(unscaled > scaled);
}

TEST_CASE("decaying schedule and explicit step") {
  ExperimentConfig cfg = convex_config("ring:3", "levels:4", "lsq:3x5:4", 50);
  cfg.alpha = 0.3;
  cfg.step_schedule = StepSchedule::kInverseT;
  const MetricsTrace tr = run_optimization(cfg);
  CHECK(tr.meta["alpha_rule"] == "config");
  CHECK(tr.rows.size() == 50);
}

TEST_CASE("configuration errors") {
  ExperimentConfig cfg = convex_config("g1", "identity", "", 10);
  CHECK_THROWS_AS(run_optimization(cfg), ConfigInvalid);
  cfg.objective = "lsq:3x10:4";
  CHECK_THROWS_AS(run_optimization(cfg), ConfigInvalid);
  cfg.objective = "lsq:10x10:4";
  cfg.mode = Mode::kGossip;
  CHECK_THROWS_AS(run_optimization(cfg), ConfigInvalid);
}

TEST_CASE("nonconvex preset runs with an estimated step") {
  ExperimentConfig cfg = convex_config("g1", "levels:16", "mlp:10:16", 60);
  cfg.mode = Mode::kNonconvex;
  const MetricsTrace tr = run_optimization(cfg);
  CHECK(tr.meta["constants"]["estimated"] == true);
  CHECK(tr.meta["objective"]["gap_is_loss"] == true);
  for (double v : tr.column("grad_norm_sq")) CHECK(std::isfinite(v));
}
