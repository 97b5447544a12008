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

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace qpush {

enum class Mode { kGossip, kConvex, kNonconvex, kValidate };

std::string mode_name(Mode mode);
Mode parse_mode(std::string_view text);

enum class StepSchedule { kConstant, kInverseT };
enum class GradientPoint { kScaled, kUnscaled };

/// Everything needed to reproduce a run. Keys in the flat JSON form match the
/// field comments; unknown keys are rejected.
struct ExperimentConfig {
  Mode mode = Mode::kGossip;               // "mode"
  std::string graph = "g1";                // "graph": ring:<n> | g1 | g2 | complete:<n> | custom:<path>
  std::string quantizer = "identity";      // "quant": identity | levels:<s>
  std::uint32_t norm_bits = 54;            // "norm_bits"
  std::uint32_t scalar_bits = 54;          // "scalar_bits"
  std::size_t dimension = 64;              // "dim" (gossip only)
  std::size_t rounds = 100;                // "rounds"
  std::uint64_t seed = 1;                  // "seed"
  std::optional<double> alpha;             // "alpha", sqrt(n)-scaled default when absent
  std::string init = "uniform01";          // "init" (gossip only)
  std::string objective;                   // "objective": lsq:<n>x<m>:<d> | mlp:<hidden>:<d>
  std::string output_dir = ".";            // "out"
  std::string name;                        // "name", file stem; defaults to the mode name
  bool enforce_admissibility = false;      // "enforce_admissibility"
  std::size_t audit_interval = 50;         // "audit_interval", 0 disables the replica audit
  std::size_t batch_size = 0;              // "batch_size", 0 picks the preset default
  std::size_t spectral_horizon = 0;        // "spectral_horizon", 0 picks max(2n, 200)
  StepSchedule step_schedule = StepSchedule::kConstant;       // "step_schedule"
  GradientPoint gradient_point = GradientPoint::kScaled;      // "gradient_point"

  std::string stem() const { return name.empty() ? mode_name(mode) : name; }
};

// Throws ConfigInvalid naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

// Field-level checks that do not need to build the graph or objective.
void validate_config(const ExperimentConfig& cfg);

}  // namespace qpush
