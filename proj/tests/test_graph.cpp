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

#include "qpush/errors.hpp"
#include "qpush/graph.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

using namespace qpush;

TEST_CASE("ring(3) is the smallest directed cycle") {
  const DirectedGraph g = build_topology("ring:3");
  CHECK(g.size() == 3);
  CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}, {2, 0}});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(g.out_degree(i) == 2);
    CHECK(g.in_degree(i) == 2);
  }
}

TEST_CASE("g1 has ten nodes and twelve arcs") {
  const DirectedGraph g = build_topology("g1");
  CHECK(g.size() == 10);
  CHECK(g.edge_count() == 12);
  CHECK(is_strongly_connected(g.size(), g.edges()));
  const auto& e = g.edges();
  CHECK(std::find(e.begin(), e.end(), Edge{1, 0}) != e.end());
  CHECK(std::find(e.begin(), e.end(), Edge{6, 5}) != e.end());
}

TEST_CASE("g2 is the bidirected cycle plus two chords") {
  const DirectedGraph g = build_topology("g2");
  CHECK(g.size() == 10);
  CHECK(g.edge_count() == 22);
  const auto& e = g.edges();
  CHECK(std::find(e.begin(), e.end(), Edge{1, 6}) != e.end());
  CHECK(std::find(e.begin(), e.end(), Edge{4, 9}) != e.end());
}

TEST_CASE("one-way pair is rejected") {
  CHECK_THROWS_AS(DirectedGraph(2, {{0, 1}}), NotStronglyConnected);
  std::istringstream in("0 1\n");
  CHECK_THROWS_AS(read_edge_list(in), NotStronglyConnected);
}

TEST_CASE("edge list parsing") {
  std::istringstream in("# ring\n0 1\n1 2\n\n2 0\n2 2\n0 1\n");
  const DirectedGraph g = read_edge_list(in);
  CHECK(g.size() == 3);
  CHECK(g.edge_count() == 3);  // self-loop dropped, duplicate collapsed
  std::istringstream bad("0 x\n");
  CHECK_THROWS(read_edge_list(bad));
  CHECK_THROWS_AS(DirectedGraph(2, {{0, 5}}), std::invalid_argument);
  CHECK_THROWS(build_topology("torus:4"));
  CHECK_THROWS(build_topology("custom:/nonexistent/edges.txt"));
}

TEST_CASE("out-degree weights on ring(3) are all one half") {
  const auto a = out_degree_weight_matrix(build_topology("ring:3"));
  const Eigen::MatrixXd& m = a.dense();
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(m(i, i) == 0.5);
    CHECK(m((i + 1) % 3, i) == 0.5);
    CHECK(m((i + 2) % 3, i) == 0.0);
  }
}

TEST_CASE("complete(4) weights are doubly stochastic") {
  const auto a = out_degree_weight_matrix(build_topology("complete:4"));
  CHECK((a.dense().array() == 0.25).all());
}

TEST_CASE("preset matrices satisfy the column-stochastic contract") {
  for (const char* preset : {"ring:3", "ring:7", "g1", "g2", "complete:5"}) {
    const auto a = out_degree_weight_matrix(build_topology(preset));
    const Eigen::MatrixXd& m = a.dense();
    CAPTURE(preset);
    CHECK((m.array() >= 0.0).all());
    CHECK((m.diagonal().array() > 0.0).all());
    CHECK((m.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(m.rows(), -3.0, 11.0);
    CHECK(std::abs((m * v).sum() - v.sum()) <= 1e-12 * v.cwiseAbs().sum());
  }
}

TEST_CASE("matrix validation") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.6, 0.4, 0.5;
  CHECK_THROWS_AS(ColumnStochasticMatrix{bad}, InvalidMatrix);
  bad << 0.0, 0.5, 1.0, 0.5;
  CHECK_THROWS_AS(ColumnStochasticMatrix{bad}, InvalidMatrix);
  bad << 1.5, 0.5, -0.5, 0.5;
  CHECK_THROWS_AS(ColumnStochasticMatrix{bad}, InvalidMatrix);
}

TEST_CASE("doubly stochastic profile") {
  const auto a = out_degree_weight_matrix(build_topology("complete:4"));
  const SpectralProfile sp = estimate_spectral_profile(a, 200, 1e-13);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(sp.phi(i) == doctest::Approx(0.25).epsilon(1e-12));
  // A^t 1 = 1, so the floor is the 0.99 safety factor times one.
  CHECK(sp.delta_est == doctest::Approx(0.99).epsilon(1e-12));
  CHECK_FALSE(sp.rate_fitted);  // A^t = phi 1^T from t = 1 on
}

TEST_CASE("ring(3) phi matches direct eigen-decomposition") {
  const auto a = out_degree_weight_matrix(build_topology("ring:3"));
  const SpectralProfile sp = estimate_spectral_profile(a, 200, 1e-13);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a.dense());
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < 3; ++k) {
    if (std::abs(es.eigenvalues()(k).real() - 1.0) < std::abs(es.eigenvalues()(best).real() - 1.0)) best = k;
  }
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  v /= v.sum();
  CHECK((sp.phi - v).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("single node profile") {
  const DirectedGraph g(1, {});
  const auto a = out_degree_weight_matrix(g);
  const SpectralProfile sp = estimate_spectral_profile(a, 2, 1e-13);
  CHECK(sp.phi(0) == 1.0);
  CHECK_FALSE(sp.rate_fitted);
  CHECK(sp.lambda_est == 0.0);
  CHECK(sp.delta_est == doctest::Approx(0.99));
}

TEST_CASE("fitted constants bound every sampled deviation") {
  for (const char* preset : {"ring:3", "ring:6", "g1", "g2"}) {
    CAPTURE(preset);
    const auto a = out_degree_weight_matrix(build_topology(preset));
    const SpectralProfile sp = estimate_spectral_profile(a, 200, 1e-13);
    REQUIRE(sp.rate_fitted);
    CHECK(sp.lambda_est > 0.0);
    CHECK(sp.lambda_est < 1.0);
    CHECK(std::abs(sp.phi.sum() - 1.0) <= 1e-10);
    CHECK((sp.phi.array() >= 0.0).all());
    CHECK((a.dense() * sp.phi - sp.phi).norm() <= 1e-8);

    const auto norms = mixing_deviation_norms(a, sp.phi, sp.horizon);
    for (std::size_t t = 0; t < norms.size(); ++t) {
      CHECK(norms[t] <= sp.c_est * std::pow(sp.lambda_est, static_cast<double>(t)) * (1.0 + 1e-12));
    }
    const Eigen::Index n = a.dense().rows();
    Eigen::VectorXd ones_t = Eigen::VectorXd::Ones(n);
    for (std::size_t t = 1; t <= sp.horizon; ++t) {
      ones_t = a.dense() * ones_t;
      CHECK(ones_t.minCoeff() >= sp.delta_est);
      const double gap = (ones_t - static_cast<double>(n) * sp.phi).norm();
      CHECK(gap <= sp.c_est * std::pow(sp.lambda_est, static_cast<double>(t)) * std::sqrt(n) + 1e-12);
    }
    CHECK(sp.delta_est > 0.0);
  }
}

TEST_CASE("g1 fitted rate tracks the second eigenvalue") {
  const auto a = out_degree_weight_matrix(g1_graph());
  const SpectralProfile sp = estimate_spectral_profile(a, 200, 1e-13);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a.dense());
  std::vector<double> mags;
  for (Eigen::Index k = 0; k < 10; ++k) mags.push_back(std::abs(es.eigenvalues()(k)));
  std::sort(mags.rbegin(), mags.rend());
  CHECK(sp.lambda_est == doctest::Approx(mags[1]).epsilon(0.01));
  const Eigen::MatrixXd shifted = a.dense() - Eigen::MatrixXd::Identity(10, 10);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(shifted);
  CHECK(sp.gamma == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
}

TEST_CASE("profile preconditions") {
  const auto a = out_degree_weight_matrix(build_topology("ring:3"));
  CHECK_THROWS(estimate_spectral_profile(a, 5, 1e-13));
  CHECK_THROWS(estimate_spectral_profile(a, 200, 0.0));
}

TEST_CASE("theory bounds by hand") {
  SpectralProfile sp;
  sp.lambda_est = 0.25;
  sp.c_est = 1.0;
  sp.gamma = 0.5;
  sp.rate_fitted = true;
  const TheoryBounds tb = theory_bounds(sp, 10, 2.0, true);
  CHECK(tb.computed);
  CHECK(tb.lambda_tilde_1 == doctest::Approx(1.0 / 36.0).epsilon(1e-14));
  CHECK(tb.omega_max_gossip == doctest::Approx(1.0 / 36.0 / 1.5).epsilon(1e-14));

  sp.lambda_est = 0.5;
  const TheoryBounds tb2 = theory_bounds(sp, 10, 2.0, true);
  CHECK(tb2.lambda_tilde_2 == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(tb2.xi == doctest::Approx(6.0 * 10 * 2.0 * 1.25 * 25.0).epsilon(1e-14));
  CHECK(tb2.omega_max_opt == doctest::Approx(0.2 / std::sqrt(6.0 * 1.25)).epsilon(1e-14));
}

TEST_CASE("theory bounds degenerate and disabled paths") {
  SpectralProfile sp;
  sp.lambda_est = 1.0 - 1e-12;
  sp.c_est = 1.0;
  CHECK_THROWS_AS(theory_bounds(sp, 3, 1.0, true), DegenerateSpectrum);
  sp.lambda_est = 0.0;
  CHECK_THROWS_AS(theory_bounds(sp, 3, 1.0, true), DegenerateSpectrum);
  CHECK_FALSE(theory_bounds(sp, 3, 1.0, false).computed);
}
