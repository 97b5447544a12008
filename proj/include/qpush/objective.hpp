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

#include "qpush/quantizer.hpp"
#include "qpush/rng.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpush {

/// Smoothness and gradient-moment constants (L, D^2, sigma^2). `estimated`
/// marks values obtained by sampling rather than derived from the data.
struct ObjectiveConstants {
  std::optional<double> lipschitz;
  std::optional<double> grad_second_moment;
  std::optional<double> grad_variance;
  bool estimated = false;
};

/// Local objective f_i held by one node.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual double loss(std::span<const double> x) const = 0;
  virtual Vector full_gradient(std::span<const double> x) const = 0;
  // Stochastic gradient grad F_i(x, zeta) with zeta drawn from `rng`.
  virtual Vector sample_gradient(std::span<const double> x, Rng& rng) const = 0;

  virtual std::optional<Vector> optimum() const { return std::nullopt; }
  virtual std::optional<double> optimal_value() const { return std::nullopt; }
  virtual ObjectiveConstants constants() const { return {}; }
};

/// f(x) = (1/2m) sum_j ||x - zeta_j||^2; one stochastic gradient averages
/// `batch_size` samples drawn uniformly with replacement.
class LeastSquaresObjective final : public Objective {
 public:
  // Throws EmptyDataset when `samples` is empty, DimensionMismatch on ragged rows.
  explicit LeastSquaresObjective(std::vector<Vector> samples, std::size_t batch_size = 1);

  std::size_t dim() const override { return mean_.size(); }
  double loss(std::span<const double> x) const override;
  Vector full_gradient(std::span<const double> x) const override;
  Vector sample_gradient(std::span<const double> x, Rng& rng) const override;
  std::optional<Vector> optimum() const override { return mean_; }
  std::optional<double> optimal_value() const override { return 0.5 * spread_; }
  ObjectiveConstants constants() const override;

  const std::vector<Vector>& samples() const noexcept { return samples_; }
  // Mean squared distance of the samples to their mean; equals sigma^2.
  double spread() const noexcept { return spread_; }

 private:
  std::vector<Vector> samples_;
  std::size_t batch_size_;
  Vector mean_;
  double spread_ = 0.0;
};

struct LabeledSample {
  Vector input;
  double label = 0.0;
};

/// Two-layer network with sigmoid hidden units and a sigmoid output, trained
/// on squared error 1/2 (p - label)^2 averaged over the local samples.
/// Parameter layout: W1 (hidden x inputs, row-major), b1, w2, b2.
class MlpObjective final : public Objective {
 public:
  MlpObjective(std::vector<LabeledSample> samples, std::size_t hidden, std::size_t batch_size = 1);

  static std::size_t parameter_count(std::size_t inputs, std::size_t hidden) {
    return hidden * (inputs + 1) + hidden + 1;
  }

  std::size_t dim() const override { return parameter_count(inputs_, hidden_); }
  double loss(std::span<const double> x) const override;
  Vector full_gradient(std::span<const double> x) const override;
  Vector sample_gradient(std::span<const double> x, Rng& rng) const override;

  std::size_t inputs() const noexcept { return inputs_; }
  std::size_t hidden() const noexcept { return hidden_; }

  // Loss of a single sample; accumulates its gradient into `grad` when given.
  double sample_loss(std::span<const double> x, const LabeledSample& s, Vector* grad) const;

 private:
  std::vector<LabeledSample> samples_;
  std::size_t inputs_;
  std::size_t hidden_;
  std::size_t batch_size_;
};

/// The n local objectives of one problem plus what the driver needs about the
/// global objective f = (1/n) sum_i f_i.
class ObjectiveSet {
 public:
  ObjectiveSet(std::string preset, std::vector<std::unique_ptr<Objective>> local,
               Vector initial_point, std::optional<Vector> optimum,
               std::optional<double> optimal_value, ObjectiveConstants constants);

  const std::string& preset() const noexcept { return preset_; }
  std::size_t size() const noexcept { return local_.size(); }
  std::size_t dim() const noexcept { return initial_point_.size(); }
  const Objective& local(std::size_t i) const { return *local_.at(i); }

  double loss(std::span<const double> x) const;
  Vector gradient(std::span<const double> x) const;

  const Vector& initial_point() const noexcept { return initial_point_; }
  const std::optional<Vector>& optimum() const noexcept { return optimum_; }
  const std::optional<double>& optimal_value() const noexcept { return optimal_value_; }
  const ObjectiveConstants& constants() const noexcept { return constants_; }

 private:
  std::string preset_;
  std::vector<std::unique_ptr<Objective>> local_;
  Vector initial_point_;
  std::optional<Vector> optimum_;
  std::optional<double> optimal_value_;
  ObjectiveConstants constants_;
};

// Least squares over explicit per-node data, starting from the zero vector.
ObjectiveSet make_least_squares(std::vector<std::vector<Vector>> data, std::size_t batch_size = 1,
                                std::string preset = "lsq");

/// zeta_j^i = zeta* + N(0, I_d) with zeta* ~ Uniform[0, scale]^d.
std::vector<std::vector<Vector>> synthetic_least_squares_data(std::size_t n, std::size_t m,
                                                              std::size_t d, std::uint64_t seed,
                                                              double scale = 100.0);

/// Two Gaussian clusters at +/- mu in R^inputs, labels 0/1 with equal odds.
std::vector<std::vector<LabeledSample>> synthetic_cluster_data(std::size_t n,
                                                               std::size_t per_node,
                                                               std::size_t inputs,
                                                               std::uint64_t seed);

ObjectiveSet make_mlp(std::vector<std::vector<LabeledSample>> data, std::size_t hidden,
                      std::size_t batch_size, std::uint64_t seed, std::string preset = "mlp");

/// "lsq:<n>x<m>:<d>" or "mlp:<hidden>:<d>". `n` is the graph size and must
/// match the lsq node count. batch_size 0 selects the preset default
/// (1 for lsq, 10 for mlp). Throws std::invalid_argument on a bad preset.
ObjectiveSet make_objectives(std::string_view preset, std::size_t n, std::uint64_t seed,
                             std::size_t batch_size = 0);

// Mean of ||sample_gradient - full_gradient||^2 over `draws` draws at x.
double empirical_gradient_variance(const Objective& f, std::span<const double> x, Rng& rng,
                                   std::size_t draws = 1000);

}  // namespace qpush
