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
#include "qpush/objective.hpp"

#include <doctest.h>

#include <cmath>

using namespace qpush;

namespace {

double rel_diff(const Vector& a, const Vector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

Vector central_difference(const Objective& f, Vector x, double h) {
  Vector g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + h;
    const double up = f.loss(x);
    x[k] = keep - h;
    const double down = f.loss(x);
    x[k] = keep;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("constant dataset") {
  const Vector c{1.5, -2.0, 4.0};
  const LeastSquaresObjective f(std::vector<Vector>(6, c));
  CHECK(*f.optimum() == c);
  CHECK(f.loss(c) == 0.0);
  CHECK(f.full_gradient(c) == Vector(3, 0.0));
  Rng rng(1);
  CHECK(f.sample_gradient(c, rng) == Vector(3, 0.0));
}

TEST_CASE("least-squares loss, gradient and sampling") {
  const std::vector<Vector> data{{0.0, 1.0}, {2.0, 3.0}, {4.0, -1.0}};
  const LeastSquaresObjective f(data);
  const Vector x{1.0, 1.0};
  double direct = 0.0;
  for (const auto& z : data) direct += (x[0] - z[0]) * (x[0] - z[0]) + (x[1] - z[1]) * (x[1] - z[1]);
  CHECK(f.loss(x) == doctest::Approx(direct / 6.0).epsilon(1e-14));
  const Vector g = f.full_gradient(x);
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(rel_diff(g, central_difference(f, x, 1e-5)) <= 1e-8);
  Rng rng(3);
  for (int r = 0; r < 20; ++r) {
    const Vector s = f.sample_gradient(x, rng);
    bool matched = false;
    for (const auto& z : data) matched = matched || (s[0] == x[0] - z[0] && s[1] == x[1] - z[1]);
    CHECK(matched);
  }
  CHECK(*f.constants().lipschitz == 1.0);
  CHECK(*f.constants().grad_variance == doctest::Approx(f.spread()));
}

TEST_CASE("global optimum is the grand mean") {
  auto data = synthetic_least_squares_data(4, 5, 3, 9);
  Vector grand(3, 0.0);
  for (const auto& node : data) {
    for (const auto& z : node) {
      for (std::size_t k = 0; k < 3; ++k) grand[k] += z[k] / 20.0;
    }
  }
  const ObjectiveSet set = make_least_squares(data);
  for (std::size_t k = 0; k < 3; ++k) CHECK((*set.optimum())[k] == doctest::Approx(grand[k]).epsilon(1e-13));
  const Vector g = set.gradient(*set.optimum());
  for (double v : g) CHECK(std::abs(v) <= 1e-12);
  CHECK(set.loss(*set.optimum()) == doctest::Approx(*set.optimal_value()));
}

TEST_CASE("synthetic least-squares optimum sits near the center") {
  const std::uint64_t seed = 5;
  const ObjectiveSet set = make_objectives("lsq:10x10:256", 10, seed);
  Rng shared = make_stream(seed, 10, 0, StreamPurpose::kData);
  double worst = 0.0;
  for (std::size_t k = 0; k < 256; ++k) {
    const double center = 100.0 * shared.uniform();
    worst = std::max(worst, std::abs((*set.optimum())[k] - center));
  }
  // Each coordinate is a mean of 100 standard normals: sd 0.1.
  CHECK(worst <= 0.5);
  CHECK(set.dim() == 256);
  CHECK(set.initial_point() == Vector(256, 0.0));
}

TEST_CASE("empty and ragged data") {
  CHECK_THROWS_AS(LeastSquaresObjective({}), EmptyDataset);
  CHECK_THROWS_AS(LeastSquaresObjective({{1.0}, {1.0, 2.0}}), DimensionMismatch);
  CHECK_THROWS_AS(MlpObjective({}, 3), EmptyDataset);
  CHECK_THROWS_AS(make_least_squares({}), EmptyDataset);
}

TEST_CASE("sampled variance is finite and close to the spread") {
  const ObjectiveSet set = make_objectives("lsq:3x10:4", 3, 2);
  const auto& f = static_cast<const LeastSquaresObjective&>(set.local(0));
  Rng rng(8);
  const Vector x{0.3, -1.0, 2.0, 5.0};
  const double v = empirical_gradient_variance(f, x, rng);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(f.spread()).epsilon(0.2));
}

TEST_CASE("network with zero weights and inputs") {
  const MlpObjective f({LabeledSample{{0.0, 0.0}, 0.0}}, 3);
  const Vector x(MlpObjective::parameter_count(2, 3), 0.0);
  CHECK(f.loss(x) == doctest::Approx(0.125));
  const Vector g = f.full_gradient(x);
  // Output delta (0.5 - 0) * 0.5 * 0.5 = 0.125; hidden activations are 0.5.
  CHECK(g.back() == doctest::Approx(0.125));
  for (std::size_t j = 0; j < 3; ++j) CHECK(g[2 * 3 + 3 + j] == doctest::Approx(0.0625));
  for (std::size_t k = 0; k < 2 * 3 + 3; ++k) CHECK(g[k] == 0.0);
}

TEST_CASE("single sample, single hidden unit, scalar input") {
  const double u = 0.7, label = 1.0;
  const double w1 = 0.3, b1 = -0.2, w2 = 1.1, b2 = 0.05;
  const MlpObjective f({LabeledSample{{u}, label}}, 1);
  const Vector x{w1, b1, w2, b2};
  const double a = w1 * u + b1;
  const double h = 1.0 / (1.0 + std::exp(-a));
  const double o = w2 * h + b2;
  const double p = 1.0 / (1.0 + std::exp(-o));
  CHECK(f.loss(x) == doctest::Approx(0.5 * (p - label) * (p - label)).epsilon(1e-14));
  const double d_o = (p - label) * p * (1.0 - p);
  const double d_a = d_o * w2 * h * (1.0 - h);
  const Vector g = f.full_gradient(x);
  CHECK(g[0] == doctest::Approx(d_a * u).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(d_a).epsilon(1e-14));
  CHECK(g[2] == doctest::Approx(d_o * h).epsilon(1e-14));
  CHECK(g[3] == doctest::Approx(d_o).epsilon(1e-14));
}

TEST_CASE("network gradients match central differences") {
  const ObjectiveSet set = make_objectives("mlp:10:16", 4, 3);
  Rng rng(41);
  for (int p = 0; p < 10; ++p) {
    Vector x = set.initial_point();
    for (double& v : x) v += 0.5 * rng.normal();
    const Objective& f = set.local(static_cast<std::size_t>(p) % set.size());
    CHECK(rel_diff(f.full_gradient(x), central_difference(f, x, 1e-5)) <= 1e-6);
  }
}

TEST_CASE("network preset shape and estimated constants") {
  const ObjectiveSet set = make_objectives("mlp:10:16", 10, 1);
  CHECK(set.size() == 10);
  CHECK(set.dim() == 10 * 17 + 10 + 1);
  CHECK_FALSE(set.optimum().has_value());
  const ObjectiveConstants& c = set.constants();
  CHECK(c.estimated);
  CHECK(*c.lipschitz > 0.0);
  CHECK(std::isfinite(*c.grad_second_moment));
  CHECK(std::isfinite(*c.grad_variance));
  Rng rng(2);
  CHECK(std::isfinite(empirical_gradient_variance(set.local(0), set.initial_point(), rng)));
}

TEST_CASE("preset parsing") {
  CHECK_THROWS_AS(make_objectives("lsq:10x10", 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_objectives("lsq:3x10:4", 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_objectives("lsq:0x10:4", 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_objectives("mlp:10", 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_objectives("logistic:4", 10, 1), std::invalid_argument);
  CHECK(make_objectives("lsq:3x2:5", 3, 1).dim() == 5);
}
