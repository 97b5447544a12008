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

#include "qpush/graph.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qpush {

/// Per-round measurements plus self-describing run metadata. `columns` and
/// `rows` are exactly what lands in the CSV; `diagnostics` holds extra
/// per-round series (conservation checks) that stay in memory.
struct MetricsTrace {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, std::vector<double>> diagnostics;

  std::size_t size() const noexcept { return rows.size(); }
  // Throws std::out_of_range for an unknown column.
  std::size_t column_index(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;
  const std::vector<double>& diagnostic(const std::string& name) const { return diagnostics.at(name); }
};

void to_json(nlohmann::json& j, const SpectralProfile& sp);
void to_json(nlohmann::json& j, const TheoryBounds& tb);

}  // namespace qpush
