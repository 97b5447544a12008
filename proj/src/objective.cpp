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

#include "qpush/objective.hpp"

#include "qpush/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qpush {

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

std::size_t parse_size(std::string_view text, std::string_view preset) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw std::invalid_argument("bad objective preset '" + std::string(preset) + "'");
  }
  return value;
}

}  // namespace

LeastSquaresObjective::LeastSquaresObjective(std::vector<Vector> samples, std::size_t batch_size)
    : samples_(std::move(samples)), batch_size_(std::max<std::size_t>(batch_size, 1)) {
  if (samples_.empty()) throw EmptyDataset("least-squares objective needs at least one sample");
  const std::size_t d = samples_.front().size();
  mean_.assign(d, 0.0);
  for (const Vector& s : samples_) {
    if (s.size() != d) throw DimensionMismatch("least-squares samples have mixed widths");
    for (std::size_t k = 0; k < d; ++k) mean_[k] += s[k];
  }
  const double m = static_cast<double>(samples_.size());
  for (double& v : mean_) v /= m;
  for (const Vector& s : samples_) spread_ += squared_distance(s, mean_);
  spread_ /= m;
}

double LeastSquaresObjective::loss(std::span<const double> x) const {
  // (1/2m) sum ||x - zeta_j||^2 = 1/2 ||x - mean||^2 + 1/2 spread
  return 0.5 * (squared_distance(x, mean_) + spread_);
}

Vector LeastSquaresObjective::full_gradient(std::span<const double> x) const {
  Vector g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) g[k] = x[k] - mean_[k];
  return g;
}

Vector LeastSquaresObjective::sample_gradient(std::span<const double> x, Rng& rng) const {
  Vector g(x.size(), 0.0);
  for (std::size_t b = 0; b < batch_size_; ++b) {
    const Vector& s = samples_[rng.below(samples_.size())];
    for (std::size_t k = 0; k < x.size(); ++k) g[k] += x[k] - s[k];
  }
  if (batch_size_ > 1) {
    for (double& v : g) v /= static_cast<double>(batch_size_);
  }
  return g;
}

ObjectiveConstants LeastSquaresObjective::constants() const {
  ObjectiveConstants c;
  c.lipschitz = 1.0;
  c.grad_variance = spread_ / static_cast<double>(batch_size_);
  // Second moment E||x - zeta||^2 = ||x - mean||^2 + spread, taken at the
  // zero initial point.
  c.grad_second_moment = squared_norm(mean_) + *c.grad_variance;
  return c;
}

MlpObjective::MlpObjective(std::vector<LabeledSample> samples, std::size_t hidden,
                           std::size_t batch_size)
    : samples_(std::move(samples)),
      inputs_(0),
      hidden_(hidden),
      batch_size_(std::max<std::size_t>(batch_size, 1)) {
  if (samples_.empty()) throw EmptyDataset("network objective needs at least one sample");
  if (hidden_ == 0) throw std::invalid_argument("network needs at least one hidden unit");
  inputs_ = samples_.front().input.size();
  for (const auto& s : samples_) {
    if (s.input.size() != inputs_) throw DimensionMismatch("network samples have mixed widths");
  }
}

double MlpObjective::sample_loss(std::span<const double> x, const LabeledSample& s,
                                 Vector* grad) const {
  const std::size_t p = inputs_, h = hidden_;
  const std::size_t b1 = h * p, w2 = b1 + h, b2 = w2 + h;
  Vector act(h);
  double out = x[b2];
  for (std::size_t j = 0; j < h; ++j) {
    double a = x[b1 + j];
    for (std::size_t k = 0; k < p; ++k) a += x[j * p + k] * s.input[k];
    act[j] = sigmoid(a);
    out += x[w2 + j] * act[j];
  }
  const double pred = sigmoid(out);
  const double err = pred - s.label;
  if (grad != nullptr) {
    Vector& g = *grad;
    const double d_out = err * pred * (1.0 - pred);
    g[b2] += d_out;
    for (std::size_t j = 0; j < h; ++j) {
      g[w2 + j] += d_out * act[j];
      const double d_act = d_out * x[w2 + j] * act[j] * (1.0 - act[j]);
      g[b1 + j] += d_act;
      for (std::size_t k = 0; k < p; ++k) g[j * p + k] += d_act * s.input[k];
    }
  }
  return 0.5 * err * err;
}

double MlpObjective::loss(std::span<const double> x) const {
  double total = 0.0;
  for (const auto& s : samples_) total += sample_loss(x, s, nullptr);
  return total / static_cast<double>(samples_.size());
}

Vector MlpObjective::full_gradient(std::span<const double> x) const {
  Vector g(dim(), 0.0);
  for (const auto& s : samples_) sample_loss(x, s, &g);
  for (double& v : g) v /= static_cast<double>(samples_.size());
  return g;
}

Vector MlpObjective::sample_gradient(std::span<const double> x, Rng& rng) const {
  Vector g(dim(), 0.0);
  for (std::size_t b = 0; b < batch_size_; ++b) {
    sample_loss(x, samples_[rng.below(samples_.size())], &g);
  }
  for (double& v : g) v /= static_cast<double>(batch_size_);
  return g;
}

ObjectiveSet::ObjectiveSet(std::string preset, std::vector<std::unique_ptr<Objective>> local,
                           Vector initial_point, std::optional<Vector> optimum,
                           std::optional<double> optimal_value, ObjectiveConstants constants)
    : preset_(std::move(preset)),
      local_(std::move(local)),
      initial_point_(std::move(initial_point)),
      optimum_(std::move(optimum)),
      optimal_value_(optimal_value),
      constants_(constants) {
  if (local_.empty()) throw EmptyDataset("objective set has no nodes");
  for (const auto& f : local_) {
    if (f->dim() != initial_point_.size()) {
      throw DimensionMismatch("local objective dimension differs from the initial point");
    }
  }
}

double ObjectiveSet::loss(std::span<const double> x) const {
  double total = 0.0;
  for (const auto& f : local_) total += f->loss(x);
  return total / static_cast<double>(local_.size());
}

Vector ObjectiveSet::gradient(std::span<const double> x) const {
  Vector g(x.size(), 0.0);
  for (const auto& f : local_) {
    const Vector gi = f->full_gradient(x);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += gi[k];
  }
  for (double& v : g) v /= static_cast<double>(local_.size());
  return g;
}

ObjectiveSet make_least_squares(std::vector<std::vector<Vector>> data, std::size_t batch_size,
                                std::string preset) {
  if (data.empty()) throw EmptyDataset("least-squares problem has no nodes");
  std::vector<std::unique_ptr<Objective>> local;
  std::vector<const LeastSquaresObjective*> views;
  ObjectiveConstants c;
  c.lipschitz = 1.0;
  c.grad_second_moment = 0.0;
  c.grad_variance = 0.0;
  for (auto& rows : data) {
    auto f = std::make_unique<LeastSquaresObjective>(std::move(rows), batch_size);
    const ObjectiveConstants ci = f->constants();
    c.grad_second_moment = std::max(*c.grad_second_moment, *ci.grad_second_moment);
    c.grad_variance = std::max(*c.grad_variance, *ci.grad_variance);
    views.push_back(f.get());
    local.push_back(std::move(f));
  }
  const std::size_t d = local.front()->dim();

  // f = (1/n) sum f_i is minimised at the average of the local means.
  Vector optimum(d, 0.0);
  for (const auto* f : views) {
    const Vector mean = *f->optimum();
    for (std::size_t k = 0; k < d; ++k) optimum[k] += mean[k];
  }
  for (double& v : optimum) v /= static_cast<double>(views.size());
  double f_star = 0.0;
  for (const auto* f : views) f_star += f->loss(optimum);
  f_star /= static_cast<double>(views.size());

  return ObjectiveSet(std::move(preset), std::move(local), Vector(d, 0.0), std::move(optimum),
                      f_star, c);
}

std::vector<std::vector<Vector>> synthetic_least_squares_data(std::size_t n, std::size_t m,
                                                              std::size_t d, std::uint64_t seed,
                                                              double scale) {
  Rng shared = make_stream(seed, n, 0, StreamPurpose::kData);
  Vector center(d);
  for (double& v : center) v = scale * shared.uniform();
  std::vector<std::vector<Vector>> data(n, std::vector<Vector>(m, Vector(d)));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, i, 0, StreamPurpose::kData);
    for (auto& row : data[i]) {
      for (std::size_t k = 0; k < d; ++k) row[k] = center[k] + rng.normal();
    }
  }
  return data;
}

std::vector<std::vector<LabeledSample>> synthetic_cluster_data(std::size_t n,
                                                               std::size_t per_node,
                                                               std::size_t inputs,
                                                               std::uint64_t seed) {
  Rng shared = make_stream(seed, n, 0, StreamPurpose::kData);
  Vector mu(inputs);
  const double scale = 2.0 / std::sqrt(static_cast<double>(inputs));
  for (double& v : mu) v = scale * shared.normal();
  std::vector<std::vector<LabeledSample>> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, i, 0, StreamPurpose::kData);
    data[i].resize(per_node);
    for (auto& s : data[i]) {
      const bool positive = rng.uniform() < 0.5;
      s.label = positive ? 1.0 : 0.0;
      s.input.resize(inputs);
      for (std::size_t k = 0; k < inputs; ++k) {
        s.input[k] = (positive ? mu[k] : -mu[k]) + rng.normal();
      }
    }
  }
  return data;
}

ObjectiveSet make_mlp(std::vector<std::vector<LabeledSample>> data, std::size_t hidden,
                      std::size_t batch_size, std::uint64_t seed, std::string preset) {
  if (data.empty() || data.front().empty()) throw EmptyDataset("network problem has no samples");
  const std::size_t n = data.size();
  const std::size_t inputs = data.front().front().input.size();
  std::vector<std::unique_ptr<Objective>> local;
  for (auto& rows : data) local.push_back(std::make_unique<MlpObjective>(std::move(rows), hidden, batch_size));
  const std::size_t dim = MlpObjective::parameter_count(inputs, hidden);

  // Shared scaled-Gaussian start; an all-zero start is a symmetric saddle.
  Vector start(dim, 0.0);
  {
    Rng rng = make_stream(seed, n + 1, 0, StreamPurpose::kInit);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(inputs));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t k = 0; k < hidden * inputs; ++k) start[k] = s1 * rng.normal();
    for (std::size_t j = 0; j < hidden; ++j) start[hidden * inputs + hidden + j] = s2 * rng.normal();
  }

  // Constants by sampling around the start.
  ObjectiveConstants c;
  c.estimated = true;
  double lip = 0.0, second = 0.0, variance = 0.0;
  Rng rng = make_stream(seed, n + 2, 0, StreamPurpose::kData);
  constexpr int kPoints = 4;
  constexpr double kStep = 1e-4;
  for (int p = 0; p < kPoints; ++p) {
    Vector x = start;
    for (double& v : x) v += rng.normal();
    Vector dir(dim);
    double norm = 0.0;
    for (double& v : dir) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    Vector x2 = x;
    for (std::size_t k = 0; k < dim; ++k) x2[k] += kStep * dir[k] / norm;
    for (const auto& f : local) {
      const Vector g1 = f->full_gradient(x);
      const Vector g2 = f->full_gradient(x2);
      lip = std::max(lip, std::sqrt(squared_distance(g1, g2)) / kStep);
      double mom = 0.0;
      constexpr std::size_t kDraws = 100;
      for (std::size_t r = 0; r < kDraws; ++r) mom += squared_norm(f->sample_gradient(x, rng));
      second = std::max(second, mom / kDraws);
      variance = std::max(variance, empirical_gradient_variance(*f, x, rng, kDraws));
    }
  }
  c.lipschitz = lip;
  c.grad_second_moment = second;
  c.grad_variance = variance;
  return ObjectiveSet(std::move(preset), std::move(local), std::move(start), std::nullopt,
                      std::nullopt, c);
}

ObjectiveSet make_objectives(std::string_view preset, std::size_t n, std::uint64_t seed,
                             std::size_t batch_size) {
  const std::string text(preset);
  if (preset.starts_with("lsq:")) {
    const auto body = preset.substr(4);
    const auto x = body.find('x');
    const auto colon = body.find(':');
    if (x == std::string_view::npos || colon == std::string_view::npos || x > colon) {
      throw std::invalid_argument("bad objective preset '" + text + "' (expected lsq:<n>x<m>:<d>)");
    }
    const std::size_t nodes = parse_size(body.substr(0, x), preset);
    const std::size_t m = parse_size(body.substr(x + 1, colon - x - 1), preset);
    const std::size_t d = parse_size(body.substr(colon + 1), preset);
    if (nodes != n) {
      throw std::invalid_argument("objective preset '" + text + "' has " + std::to_string(nodes) +
                                  " nodes but the graph has " + std::to_string(n));
    }
    return make_least_squares(synthetic_least_squares_data(n, m, d, seed),
                              batch_size == 0 ? 1 : batch_size, text);
  }
  if (preset.starts_with("mlp:")) {
    const auto body = preset.substr(4);
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("bad objective preset '" + text + "' (expected mlp:<hidden>:<d>)");
    }
    const std::size_t hidden = parse_size(body.substr(0, colon), preset);
    const std::size_t inputs = parse_size(body.substr(colon + 1), preset);
    constexpr std::size_t kSamplesPerNode = 100;
    return make_mlp(synthetic_cluster_data(n, kSamplesPerNode, inputs, seed), hidden,
                    batch_size == 0 ? 10 : batch_size, seed, text);
  }
  throw std::invalid_argument("unknown objective preset '" + text + "'");
}

double empirical_gradient_variance(const Objective& f, std::span<const double> x, Rng& rng,
                                   std::size_t draws) {
  const Vector full = f.full_gradient(x);
  double total = 0.0;
  for (std::size_t r = 0; r < draws; ++r) total += squared_distance(f.sample_gradient(x, rng), full);
  return total / static_cast<double>(draws);
}

}  // namespace qpush
