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

#include "qpush/config.hpp"

#include "qpush/errors.hpp"
#include "qpush/quantizer.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace qpush {

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::kGossip: return "gossip";
    case Mode::kConvex: return "convex";
    case Mode::kNonconvex: return "nonconvex";
    case Mode::kValidate: return "validate";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  if (text == "gossip") return Mode::kGossip;
  if (text == "convex") return Mode::kConvex;
  if (text == "nonconvex") return Mode::kNonconvex;
  if (text == "validate") return Mode::kValidate;
  throw ConfigInvalid("mode", "expected gossip, convex, nonconvex or validate, got '" +
                                  std::string(text) + "'");
}

namespace {

template <typename T>
T read_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(key, e.what());
  }
}

std::uint64_t read_unsigned(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigInvalid(key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigInvalid("<root>", "config must be a flat JSON object");
  static const std::set<std::string> known = {
      "mode",      "graph",         "quant",          "norm_bits",       "scalar_bits",
      "dim",       "rounds",        "seed",           "alpha",           "init",
      "objective", "out",           "name",           "enforce_admissibility",
      "audit_interval", "batch_size", "spectral_horizon", "step_schedule", "gradient_point"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigInvalid(key, "unknown key");
  }

  ExperimentConfig cfg;
  if (j.contains("mode")) cfg.mode = parse_mode(read_field<std::string>(j, "mode"));
  if (j.contains("graph")) cfg.graph = read_field<std::string>(j, "graph");
  if (j.contains("quant")) cfg.quantizer = read_field<std::string>(j, "quant");
  if (j.contains("norm_bits")) cfg.norm_bits = static_cast<std::uint32_t>(read_unsigned(j, "norm_bits"));
  if (j.contains("scalar_bits")) cfg.scalar_bits = static_cast<std::uint32_t>(read_unsigned(j, "scalar_bits"));
  if (j.contains("dim")) cfg.dimension = read_unsigned(j, "dim");
  if (j.contains("rounds")) cfg.rounds = read_unsigned(j, "rounds");
  if (j.contains("seed")) cfg.seed = read_unsigned(j, "seed");
  if (j.contains("alpha") && !j.at("alpha").is_null()) cfg.alpha = read_field<double>(j, "alpha");
  if (j.contains("init")) cfg.init = read_field<std::string>(j, "init");
  if (j.contains("objective")) cfg.objective = read_field<std::string>(j, "objective");
  if (j.contains("out")) cfg.output_dir = read_field<std::string>(j, "out");
  if (j.contains("name")) cfg.name = read_field<std::string>(j, "name");
  if (j.contains("enforce_admissibility")) {
    cfg.enforce_admissibility = read_field<bool>(j, "enforce_admissibility");
  }
  if (j.contains("audit_interval")) cfg.audit_interval = read_unsigned(j, "audit_interval");
  if (j.contains("batch_size")) cfg.batch_size = read_unsigned(j, "batch_size");
  if (j.contains("spectral_horizon")) cfg.spectral_horizon = read_unsigned(j, "spectral_horizon");
  if (j.contains("step_schedule")) {
    const auto s = read_field<std::string>(j, "step_schedule");
    if (s == "constant") {
      cfg.step_schedule = StepSchedule::kConstant;
    } else if (s == "inverse_t") {
      cfg.step_schedule = StepSchedule::kInverseT;
    } else {
      throw ConfigInvalid("step_schedule", "expected constant or inverse_t");
    }
  }
  if (j.contains("gradient_point")) {
    const auto s = read_field<std::string>(j, "gradient_point");
    if (s == "scaled") {
      cfg.gradient_point = GradientPoint::kScaled;
    } else if (s == "unscaled") {
      cfg.gradient_point = GradientPoint::kUnscaled;
    } else {
      throw ConfigInvalid("gradient_point", "expected scaled or unscaled");
    }
  }
  validate_config(cfg);
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["mode"] = mode_name(cfg.mode);
  j["graph"] = cfg.graph;
  j["quant"] = cfg.quantizer;
  j["norm_bits"] = cfg.norm_bits;
  j["scalar_bits"] = cfg.scalar_bits;
  j["dim"] = cfg.dimension;
  j["rounds"] = cfg.rounds;
  j["seed"] = cfg.seed;
  j["alpha"] = cfg.alpha ? nlohmann::json(*cfg.alpha) : nlohmann::json(nullptr);
  j["init"] = cfg.init;
  j["objective"] = cfg.objective;
  j["out"] = cfg.output_dir;
  j["name"] = cfg.name;
  j["enforce_admissibility"] = cfg.enforce_admissibility;
  j["audit_interval"] = cfg.audit_interval;
  j["batch_size"] = cfg.batch_size;
  j["spectral_horizon"] = cfg.spectral_horizon;
  j["step_schedule"] = cfg.step_schedule == StepSchedule::kConstant ? "constant" : "inverse_t";
  j["gradient_point"] = cfg.gradient_point == GradientPoint::kScaled ? "scaled" : "unscaled";
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid("<root>", std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.mode == Mode::kValidate) return;
  if (cfg.graph.empty()) throw ConfigInvalid("graph", "must not be empty");
  try {
    parse_quantizer(cfg.quantizer);
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid("quant", e.what());
  }
  if (cfg.rounds == 0) throw ConfigInvalid("rounds", "must be at least 1");
  if (cfg.mode == Mode::kGossip) {
    if (cfg.dimension == 0) throw ConfigInvalid("dim", "must be at least 1");
    if (cfg.init != "uniform01" && cfg.init != "zeros") {
      throw ConfigInvalid("init", "expected uniform01 or zeros");
    }
  }
  if (cfg.alpha && !(*cfg.alpha >= 0.0 && std::isfinite(*cfg.alpha))) {
    throw ConfigInvalid("alpha", "must be a finite non-negative number");
  }
  if (cfg.output_dir.empty()) throw ConfigInvalid("out", "must not be empty");
  if (cfg.name.find('/') != std::string::npos) {
    throw ConfigInvalid("name", "must be a file stem, not a path");
  }
}

}  // namespace qpush
