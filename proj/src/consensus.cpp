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
#include "run_support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qpush {

std::vector<GossipNodeState> init_gossip(const DirectedGraph& g, const std::vector<Vector>& x_init,
                                         std::size_t d) {
  if (x_init.size() != g.size()) {
    throw DimensionMismatch("expected " + std::to_string(g.size()) + " initial rows, got " +
                            std::to_string(x_init.size()));
  }
  std::vector<GossipNodeState> states(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (x_init[i].size() != d) {
      throw DimensionMismatch("initial row " + std::to_string(i) + " has width " +
                              std::to_string(x_init[i].size()) + ", expected " + std::to_string(d));
    }
    GossipNodeState& s = states[i];
    s.id = i;
    s.x = x_init[i];
    s.x_hat_self.assign(d, 0.0);
    for (std::size_t j : g.in_neighbors(i)) s.x_hat_in.push_back(Replica{j, Vector(d, 0.0)});
    s.y = 1.0;
    s.z = s.x;
  }
  return states;
}

GossipRoundResult gossip_round(const std::vector<GossipNodeState>& states,
                               const ColumnStochasticMatrix& a, const QuantizerSpec& spec,
                               const RoundContext& ctx) {
  if (states.size() != a.size()) {
    throw DimensionMismatch("state count does not match the mixing matrix");
  }
  GossipRoundResult result;
  result.states = states;
  auto exchange = detail::quantized_exchange(states, result.states, a, spec, ctx);
  for (std::size_t i = 0; i < states.size(); ++i) {
    GossipNodeState& s = result.states[i];
    s.x = std::move(exchange.mixed[i]);
    for (std::size_t k = 0; k < s.x.size(); ++k) s.z[k] = s.x[k] / s.y;
  }
  result.bits = exchange.bits;
  result.residual_u = std::sqrt(exchange.residual_sq);
  return result;
}

std::vector<Vector> uniform01_init(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::vector<Vector> rows(n, Vector(d));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, i, 0, StreamPurpose::kInit);
    for (double& v : rows[i]) v = rng.uniform();
  }
  return rows;
}

MetricsTrace run_gossip(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const DirectedGraph g = detail::topology_from_config(cfg);
  const std::size_t n = g.size();
  std::vector<Vector> x_init = cfg.init == "zeros" ? std::vector<Vector>(n, Vector(cfg.dimension, 0.0))
                                                   : uniform01_init(n, cfg.dimension, cfg.seed);
  return run_gossip(cfg, x_init);
}

MetricsTrace run_gossip(const ExperimentConfig& cfg, const std::vector<Vector>& x_init) {
  validate_config(cfg);
  const detail::Network net = detail::build_network(cfg);
  const QuantizerSpec spec = detail::quantizer_from_config(cfg);
  const std::size_t n = net.graph.size();
  const std::size_t d = cfg.dimension;
  const SpectralProfile& sp = net.profile;

  std::vector<GossipNodeState> states = init_gossip(net.graph, x_init, d);

  Vector target(d, 0.0), mass0(d, 0.0);
  double x1_norm_sq = 0.0;
  for (const auto& row : x_init) {
    for (std::size_t k = 0; k < d; ++k) {
      mass0[k] += row[k];
      x1_norm_sq += row[k] * row[k];
    }
  }
  for (std::size_t k = 0; k < d; ++k) target[k] = mass0[k] / static_cast<double>(n);
  const double x1_norm = std::sqrt(x1_norm_sq);

  auto errors = [&](const std::vector<GossipNodeState>& st) {
    double max_err = 0.0, sum_err = 0.0;
    for (const auto& s : st) {
      double e = 0.0;
      for (std::size_t k = 0; k < d; ++k) e += (s.z[k] - target[k]) * (s.z[k] - target[k]);
      e = std::sqrt(e);
      max_err = std::max(max_err, e);
      sum_err += e;
    }
    return std::pair{max_err, sum_err / static_cast<double>(n)};
  };

  const double w_sq = omega_sq(d, spec);
  const TheoryBounds bounds = detail::bounds_or_empty(sp, n, 0.0);
  std::optional<double> omega_max;
  if (bounds.computed) omega_max = bounds.omega_max_gossip;

  MetricsTrace trace;
  trace.columns = {"round", "max_err", "mean_err", "residual_u", "mass_drift", "cum_bits"};
  trace.rows.reserve(cfg.rounds);
  auto& y_sum_dev = trace.diagnostics["y_sum_dev"];
  auto& y_min = trace.diagnostics["y_min"];

  nlohmann::json adm = detail::admissibility(cfg, w_sq, omega_max, "gossip");
  const auto [err0_max, err0_mean] = errors(states);

  const double inf = std::numeric_limits<double>::infinity();
  std::uint64_t cum_bits = 0;
  std::optional<std::size_t> diverged_round;
  double max_drift = 0.0, max_y_dev = 0.0, min_y = inf;
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const RoundContext ctx{cfg.seed, t, cfg.audit_interval};
    if (diverged_round) {
      cum_bits += net.graph.edge_count() * message_bits(d, spec);
      trace.rows.push_back({static_cast<double>(t), inf, inf, inf, inf,
                            static_cast<double>(cum_bits)});
      continue;
    }
    GossipRoundResult res = gossip_round(states, net.mixing, spec, ctx);
    states = std::move(res.states);
    cum_bits += res.bits;

    Vector mass(d, 0.0);
    double y_sum = 0.0, y_lo = inf, magnitude = 0.0;
    for (const auto& s : states) {
      for (std::size_t k = 0; k < d; ++k) {
        mass[k] += s.x[k];
        magnitude = std::max(magnitude, std::abs(s.x[k]));
      }
      y_sum += s.y;
      y_lo = std::min(y_lo, s.y);
    }
    if (!(magnitude < detail::kDivergenceLimit) || !std::isfinite(res.residual_u)) {
      diverged_round = t;
      trace.rows.push_back({static_cast<double>(t), inf, inf, inf, inf,
                            static_cast<double>(cum_bits)});
      continue;
    }
    double drift = 0.0;
    for (std::size_t k = 0; k < d; ++k) drift += std::abs(mass[k] - mass0[k]);
    const auto [max_err, mean_err] = errors(states);
    trace.rows.push_back({static_cast<double>(t), max_err, mean_err, res.residual_u, drift,
                          static_cast<double>(cum_bits)});
    y_sum_dev.push_back(std::abs(y_sum - static_cast<double>(n)));
    y_min.push_back(y_lo);
    max_drift = std::max(max_drift, drift);
    max_y_dev = std::max(max_y_dev, y_sum_dev.back());
    min_y = std::min(min_y, y_lo);
  }

  nlohmann::json& meta = trace.meta;
  meta["config"] = config_to_json(cfg);
  meta["graph"] = {{"nodes", n}, {"edges", net.graph.edge_count()}};
  meta["spectral_profile"] = sp;
  meta["theory_bounds"] = bounds;
  meta["quantizer"] = {{"spec", spec.to_string()},
                       {"message_bits", message_bits(d, spec)},
                       {"norm_bits", spec.norm_bits},
                       {"scalar_bits", spec.scalar_bits}};
  meta["admissibility"] = adm;
  meta["initial_max_err"] = err0_max;
  meta["initial_mean_err"] = err0_mean;
  meta["x1_norm"] = x1_norm;
  if (sp.rate_fitted) {
    const double lambda = sp.lambda_est;
    meta["xi_1"] = std::sqrt(w_sq) * (1.0 + sp.gamma) * x1_norm *
                   std::max(4.0 * sp.c_est / lambda, 1.0 / std::sqrt(lambda));
    meta["predicted_rate"] = std::sqrt(lambda);
  }
  meta["diverged"] = diverged_round.has_value();
  meta["diverged_round"] = diverged_round ? nlohmann::json(*diverged_round) : nlohmann::json(nullptr);
  meta["conservation"] = {{"max_mass_drift", max_drift},
                          {"max_y_sum_dev", max_y_dev},
                          {"min_y", std::isfinite(min_y) ? nlohmann::json(min_y) : nlohmann::json(nullptr)}};
  meta["rows"] = trace.rows.size();
  return trace;
}

}  // namespace qpush
