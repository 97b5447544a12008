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

#include "run_support.hpp"

#include "qpush/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace qpush::detail {

DirectedGraph topology_from_config(const ExperimentConfig& cfg) {
  try {
    return build_topology(cfg.graph);
  } catch (const NotStronglyConnected&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid("graph", e.what());
  }
}

Network build_network(const ExperimentConfig& cfg) {
  std::optional<DirectedGraph> graph;
  graph.emplace(topology_from_config(cfg));
  ColumnStochasticMatrix mixing = out_degree_weight_matrix(*graph);
  const std::size_t n = graph->size();
  const std::size_t horizon =
      cfg.spectral_horizon == 0 ? std::max<std::size_t>(2 * n, 200) : cfg.spectral_horizon;
  if (horizon < 2 * n) throw ConfigInvalid("spectral_horizon", "must be at least 2n");
  SpectralProfile profile = estimate_spectral_profile(mixing, horizon, 1e-13);
  return Network{std::move(*graph), std::move(mixing), std::move(profile)};
}

QuantizerSpec quantizer_from_config(const ExperimentConfig& cfg) {
  QuantizerSpec spec;
  try {
    spec = parse_quantizer(cfg.quantizer);
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid("quant", e.what());
  }
  spec.norm_bits = cfg.norm_bits;
  spec.scalar_bits = cfg.scalar_bits;
  return spec;
}

TheoryBounds bounds_or_empty(const SpectralProfile& sp, std::size_t n, double d_sq) {
  try {
    return theory_bounds(sp, n, d_sq, sp.rate_fitted);
  } catch (const DegenerateSpectrum&) {
    return TheoryBounds{};
  }
}

nlohmann::json admissibility(const ExperimentConfig& cfg, double omega_sq_value,
                             std::optional<double> omega_max, const char* threshold_name) {
  const double omega = std::sqrt(omega_sq_value);
  if (cfg.enforce_admissibility && omega_sq_value >= 1.0) {
    throw ConfigInvalid("quant", "omega^2 = " + std::to_string(omega_sq_value) +
                                     " violates the contraction requirement omega < 1");
  }
  nlohmann::json j;
  j["omega"] = omega;
  j["omega_sq"] = omega_sq_value;
  j["threshold"] = threshold_name;
  j["enforced"] = cfg.enforce_admissibility;
  if (!omega_max) {
    j["omega_max"] = nullptr;
    j["verdict"] = "undetermined";
    j["warning"] = false;
    return j;
  }
  const bool ok = omega <= *omega_max;
  j["omega_max"] = *omega_max;
  j["verdict"] = ok ? "admissible" : "inadmissible";
  j["warning"] = cfg.enforce_admissibility && !ok;
  if (cfg.enforce_admissibility && !ok) {
    std::cerr << "warning: omega = " << omega << " exceeds the " << threshold_name
              << " admissibility threshold " << *omega_max << "\n";
  }
  return j;
}

}  // namespace qpush::detail
