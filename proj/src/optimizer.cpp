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

#include "qpush/optimizer.hpp"

#include "qpush/errors.hpp"
#include "run_support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpush {

std::vector<OptNodeState> init_optimizer(const DirectedGraph& g, const Vector& start) {
  const std::size_t d = start.size();
  std::vector<OptNodeState> states(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    OptNodeState& s = states[i];
    s.id = i;
    s.x = start;
    s.x_hat_self.assign(d, 0.0);
    for (std::size_t j : g.in_neighbors(i)) s.x_hat_in.push_back(Replica{j, Vector(d, 0.0)});
    s.y = 1.0;
    s.w = start;
    s.z = start;
    s.z_time_avg.assign(d, 0.0);
  }
  return states;
}

SgdRoundResult sgd_round(const std::vector<OptNodeState>& states, const ColumnStochasticMatrix& a,
                         const QuantizerSpec& spec, double alpha, const ObjectiveSet& objectives,
                         const RoundContext& ctx, GradientPoint point) {
  if (states.size() != a.size() || states.size() != objectives.size()) {
    throw DimensionMismatch("state, matrix and objective counts differ");
  }
  SgdRoundResult result;
  result.states = states;
  auto exchange = detail::quantized_exchange(states, result.states, a, spec, ctx);
  const std::size_t d = states.empty() ? 0 : states[0].x.size();
  result.gradient_sum.assign(d, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    OptNodeState& s = result.states[i];
    s.w = std::move(exchange.mixed[i]);
    for (std::size_t k = 0; k < d; ++k) s.z[k] = s.w[k] / s.y;
    Rng rng = make_stream(ctx.seed, i, ctx.round, StreamPurpose::kSample);
    const Vector g = objectives.local(i).sample_gradient(point == GradientPoint::kScaled ? s.z : s.w, rng);
    for (std::size_t k = 0; k < d; ++k) {
      s.x[k] = s.w[k] - alpha * g[k];
      result.gradient_sum[k] += g[k];
    }
    ++s.averaged_rounds;
    const double weight = 1.0 / static_cast<double>(s.averaged_rounds);
    for (std::size_t k = 0; k < d; ++k) s.z_time_avg[k] += (s.z[k] - s.z_time_avg[k]) * weight;
  }
  result.bits = exchange.bits;
  result.residual_u = exchange.residual_sq;
  return result;
}

double default_step_size(Mode mode, std::size_t n, double lipschitz, std::size_t rounds) {
  const double base = std::sqrt(static_cast<double>(n)) /
                      (lipschitz * std::sqrt(static_cast<double>(rounds)));
  return mode == Mode::kConvex ? base / 8.0 : base;
}

MetricsTrace run_optimization(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.objective.empty()) throw ConfigInvalid("objective", "optimization modes need an objective preset");
  const DirectedGraph g = detail::topology_from_config(cfg);
  std::optional<ObjectiveSet> objectives;
  try {
    objectives.emplace(make_objectives(cfg.objective, g.size(), cfg.seed, cfg.batch_size));
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid("objective", e.what());
  }
  return run_optimization(cfg, *objectives);
}

namespace {

double squared_norm(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

MetricsTrace run_optimization(const ExperimentConfig& cfg, const ObjectiveSet& objectives) {
  validate_config(cfg);
  if (cfg.mode != Mode::kConvex && cfg.mode != Mode::kNonconvex) {
    throw ConfigInvalid("mode", "run_optimization needs mode convex or nonconvex");
  }
  const detail::Network net = detail::build_network(cfg);
  const QuantizerSpec spec = detail::quantizer_from_config(cfg);
  const std::size_t n = net.graph.size();
  if (objectives.size() != n) {
    throw ConfigInvalid("objective", "problem has " + std::to_string(objectives.size()) +
                                         " nodes but the graph has " + std::to_string(n));
  }
  const std::size_t d = objectives.dim();
  const ObjectiveConstants& constants = objectives.constants();

  double alpha = 0.0;
  std::string alpha_rule = "config";
  if (cfg.alpha) {
    alpha = *cfg.alpha;
  } else {
    if (!constants.lipschitz || !(*constants.lipschitz > 0.0)) {
      throw ConfigInvalid("alpha", "no smoothness constant available; set alpha explicitly");
    }
    alpha = default_step_size(cfg.mode, n, *constants.lipschitz, cfg.rounds);
    alpha_rule = cfg.mode == Mode::kConvex ? "sqrt(n)/(8 L sqrt(T))" : "sqrt(n)/(L sqrt(T))";
  }

  const SpectralProfile& sp = net.profile;
  const double d_sq = constants.grad_second_moment.value_or(0.0);
  const TheoryBounds bounds = detail::bounds_or_empty(sp, n, d_sq);
  std::optional<double> omega_max;
  if (bounds.computed) omega_max = bounds.omega_max_opt;
  const double w_sq = omega_sq(d, spec);
  nlohmann::json adm = detail::admissibility(cfg, w_sq, omega_max, "optimization");

  std::vector<OptNodeState> states = init_optimizer(net.graph, objectives.initial_point());
  const double f_star = objectives.optimal_value().value_or(0.0);
  const double initial_gap = objectives.loss(objectives.initial_point()) - f_star;

  MetricsTrace trace;
  trace.columns = {"round", "gap_node1_avg", "cons_err_max", "grad_norm_sq", "residual_u", "cum_bits"};
  trace.rows.reserve(cfg.rounds);
  auto& mass_res = trace.diagnostics["mass_identity_residual"];
  auto& y_sum_dev = trace.diagnostics["y_sum_dev"];
  auto& y_min = trace.diagnostics["y_min"];

  const double inf = std::numeric_limits<double>::infinity();
  std::uint64_t cum_bits = 0;
  std::optional<std::size_t> diverged_round;
  double max_mass = 0.0, max_y_dev = 0.0, min_y = inf;
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    if (diverged_round) {
      cum_bits += net.graph.edge_count() * message_bits(d, spec);
      trace.rows.push_back({static_cast<double>(t), inf, inf, inf, inf, static_cast<double>(cum_bits)});
      continue;
    }
    Vector mass_before(d, 0.0);
    for (const auto& s : states) {
      for (std::size_t k = 0; k < d; ++k) mass_before[k] += s.x[k];
    }
    Vector x_bar = mass_before;
    for (double& v : x_bar) v /= static_cast<double>(n);

    const double step = cfg.step_schedule == StepSchedule::kInverseT ? alpha / static_cast<double>(t) : alpha;
    const RoundContext ctx{cfg.seed, t, cfg.audit_interval};
    SgdRoundResult res = sgd_round(states, net.mixing, spec, step, objectives, ctx, cfg.gradient_point);
    states = std::move(res.states);
    cum_bits += res.bits;

    Vector mass_after(d, 0.0);
    double y_sum = 0.0, y_lo = inf, magnitude = 0.0, cons = 0.0;
    for (const auto& s : states) {
      double e = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        mass_after[k] += s.x[k];
        magnitude = std::max(magnitude, std::abs(s.x[k]));
        e += (s.z[k] - x_bar[k]) * (s.z[k] - x_bar[k]);
      }
      cons = std::max(cons, e);
      y_sum += s.y;
      y_lo = std::min(y_lo, s.y);
    }
    if (!(magnitude < detail::kDivergenceLimit) || !std::isfinite(res.residual_u)) {
      diverged_round = t;
      trace.rows.push_back({static_cast<double>(t), inf, inf, inf, inf, static_cast<double>(cum_bits)});
      continue;
    }

    // sum x(t+1) = sum x(t) - step * sum g, relative to the magnitudes involved.
    double residual = 0.0, scale = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double expected = mass_before[k] - step * res.gradient_sum[k];
      residual = std::max(residual, std::abs(mass_after[k] - expected));
      scale = std::max({scale, std::abs(mass_before[k]), std::abs(step * res.gradient_sum[k])});
    }
    mass_res.push_back(residual / scale);
    y_sum_dev.push_back(std::abs(y_sum - static_cast<double>(n)));
    y_min.push_back(y_lo);
    max_mass = std::max(max_mass, mass_res.back());
    max_y_dev = std::max(max_y_dev, y_sum_dev.back());
    min_y = std::min(min_y, y_lo);

    const double gap = objectives.loss(states[0].z_time_avg) - f_star;
    const double grad_sq = squared_norm(objectives.gradient(x_bar));
    trace.rows.push_back({static_cast<double>(t), gap, cons, grad_sq, res.residual_u,
                          static_cast<double>(cum_bits)});
  }

  nlohmann::json& meta = trace.meta;
  meta["config"] = config_to_json(cfg);
  meta["graph"] = {{"nodes", n}, {"edges", net.graph.edge_count()}};
  meta["objective"] = {{"preset", objectives.preset()},
                       {"dim", d},
                       {"optimal_value", objectives.optimal_value() ? nlohmann::json(f_star) : nlohmann::json(nullptr)},
                       {"gap_is_loss", !objectives.optimal_value().has_value()}};
  auto opt_json = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  meta["constants"] = {{"L", opt_json(constants.lipschitz)},
                       {"D_sq", opt_json(constants.grad_second_moment)},
                       {"sigma_sq", opt_json(constants.grad_variance)},
                       {"estimated", constants.estimated}};
  meta["alpha"] = alpha;
  meta["alpha_rule"] = alpha_rule;
  meta["spectral_profile"] = sp;
  meta["theory_bounds"] = bounds;
  meta["quantizer"] = {{"spec", spec.to_string()},
                       {"message_bits", message_bits(d, spec)},
                       {"norm_bits", spec.norm_bits},
                       {"scalar_bits", spec.scalar_bits}};
  meta["admissibility"] = adm;
  meta["initial_gap"] = initial_gap;
  if (!diverged_round) {
    nlohmann::json gaps = nlohmann::json::array();
    for (const auto& s : states) gaps.push_back(objectives.loss(s.z_time_avg) - f_star);
    meta["final_gaps_all_nodes"] = gaps;
  } else {
    meta["final_gaps_all_nodes"] = nullptr;
  }
  meta["diverged"] = diverged_round.has_value();
  meta["diverged_round"] = diverged_round ? nlohmann::json(*diverged_round) : nlohmann::json(nullptr);
  meta["conservation"] = {{"max_mass_identity_residual", max_mass},
                          {"max_y_sum_dev", max_y_dev},
                          {"min_y", std::isfinite(min_y) ? nlohmann::json(min_y) : nlohmann::json(nullptr)}};
  meta["rows"] = trace.rows.size();
  return trace;
}

}  // namespace qpush
