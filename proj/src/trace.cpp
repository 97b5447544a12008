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

#include "qpush/trace.hpp"

#include <stdexcept>

namespace qpush {

std::size_t MetricsTrace::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw std::out_of_range("trace has no column '" + std::string(name) + "'");
}

std::vector<double> MetricsTrace::column(std::string_view name) const {
  const std::size_t idx = column_index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[idx]);
  return out;
}

void to_json(nlohmann::json& j, const SpectralProfile& sp) {
  j = nlohmann::json{{"phi", std::vector<double>(sp.phi.data(), sp.phi.data() + sp.phi.size())},
                     {"lambda_est", sp.lambda_est},
                     {"c_est", sp.c_est},
                     {"delta_est", sp.delta_est},
                     {"gamma", sp.gamma},
                     {"rate_fitted", sp.rate_fitted},
                     {"horizon", sp.horizon},
                     {"power_iterations", sp.power_iterations}};
}

void to_json(nlohmann::json& j, const TheoryBounds& tb) {
  if (!tb.computed) {
    j = nlohmann::json{{"computed", false}};
    return;
  }
  j = nlohmann::json{{"computed", true},
                     {"lambda_tilde_1", tb.lambda_tilde_1},
                     {"lambda_tilde_2", tb.lambda_tilde_2},
                     {"xi", tb.xi},
                     {"omega_max_gossip", tb.omega_max_gossip},
                     {"omega_max_opt", tb.omega_max_opt}};
}

}  // namespace qpush
