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
#include "qpush/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qpush::IoError("cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw qpush::ConfigInvalid("<root>", std::string("not valid JSON: ") + e.what());
  }
}

std::vector<double> parse_targets(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size() || !(v > 0.0)) throw qpush::ConfigInvalid("targets", "bad target '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw qpush::ConfigInvalid("targets", "no targets given");
  return out;
}

// One optional flag per config key; set flags replace file values.
struct Overrides {
  std::optional<std::string> mode, graph, quant, init, objective, out, name, step_schedule, gradient_point;
  std::optional<std::uint64_t> norm_bits, scalar_bits, dim, rounds, seed, audit_interval, batch_size,
      spectral_horizon;
  std::optional<double> alpha;
  std::optional<bool> enforce;

  void attach(CLI::App* app) {
    app->add_option("--mode", mode, "gossip | convex | nonconvex | validate");
    app->add_option("--graph", graph, "ring:<n> | complete:<n> | g1 | g2 | custom:<path>");
    app->add_option("--quant", quant, "identity | levels:<s>");
    app->add_option("--norm-bits", norm_bits);
    app->add_option("--scalar-bits", scalar_bits);
    app->add_option("--dim", dim);
    app->add_option("--rounds", rounds);
    app->add_option("--seed", seed);
    app->add_option("--alpha", alpha);
    app->add_option("--init", init, "uniform01 | zeros");
    app->add_option("--objective", objective, "lsq:<n>x<m>:<d> | mlp:<hidden>:<d>");
    app->add_option("--out", out, "output directory");
    app->add_option("--name", name, "output file stem");
    app->add_option("--enforce-admissibility", enforce);
    app->add_option("--audit-interval", audit_interval);
    app->add_option("--batch-size", batch_size);
    app->add_option("--spectral-horizon", spectral_horizon);
    app->add_option("--step-schedule", step_schedule, "constant | inverse_t");
    app->add_option("--gradient-point", gradient_point, "scaled | unscaled");
  }

  void apply(nlohmann::json& j) const {
    auto set = [&j](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    set("mode", mode);
    set("graph", graph);
    set("quant", quant);
    set("norm_bits", norm_bits);
    set("scalar_bits", scalar_bits);
    set("dim", dim);
    set("rounds", rounds);
    set("seed", seed);
    set("alpha", alpha);
    set("init", init);
    set("objective", objective);
    set("out", out);
    set("name", name);
    set("enforce_admissibility", enforce);
    set("audit_interval", audit_interval);
    set("batch_size", batch_size);
    set("spectral_horizon", spectral_horizon);
    set("step_schedule", step_schedule);
    set("gradient_point", gradient_point);
  }
};

int print_checks(const qpush::MetricsTrace& trace) {
  for (const auto& c : trace.meta.at("checks")) {
    std::cout << (c.at("passed").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>()
              << "  value=" << c.at("value").get<double>() << " tol=" << c.at("tolerance").get<double>()
              << "\n";
  }
  const bool ok = trace.meta.at("passed").get<bool>();
  std::cout << (ok ? "all checks passed" : "some checks failed") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized push-sum gossip and decentralized SGD simulator"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides overrides;
  auto* run_cmd = app.add_subcommand("run", "run one experiment and write <out>/<name>.csv and .meta.json");
  run_cmd->add_option("--config", config_path, "flat JSON config file")->check(CLI::ExistingFile);
  overrides.attach(run_cmd);

  auto* validate_cmd = app.add_subcommand("validate", "run the engine-versus-reference equivalence suite");

  std::string quantized_path, exact_path, targets_text = "1e-1,1e-2,1e-3";
  auto* compare_cmd = app.add_subcommand("compare", "bits needed to reach each target relative error");
  compare_cmd->add_option("--quantized", quantized_path)->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--exact", exact_path)->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--targets", targets_text, "comma-separated relative errors");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      nlohmann::json j = config_path.empty() ? nlohmann::json::object() : read_json_file(config_path);
      overrides.apply(j);
      const qpush::ExperimentConfig cfg = qpush::config_from_json(j);
      const qpush::MetricsTrace trace = qpush::run(cfg);
      if (cfg.mode == qpush::Mode::kValidate) return print_checks(trace);
      std::cout << "wrote " << trace.size() << " rows to " << cfg.output_dir << "/" << cfg.stem() << ".csv\n";
      return 0;
    }
    if (*validate_cmd) {
      qpush::ExperimentConfig cfg;
      cfg.mode = qpush::Mode::kValidate;
      return print_checks(qpush::simulate(cfg));
    }
    if (*compare_cmd) {
      const auto quantized = qpush::config_from_json(read_json_file(quantized_path));
      const auto exact = qpush::config_from_json(read_json_file(exact_path));
      const auto table = qpush::bits_to_error(quantized, exact, parse_targets(targets_text));
      std::cout << qpush::format_comparison(table);
      return 0;
    }
  } catch (const qpush::ConfigInvalid& e) {
    std::cerr << "config error [" << e.field() << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
