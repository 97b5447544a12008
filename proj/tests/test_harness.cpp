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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qpush;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / ("qpush_test_" + leaf);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config JSON round trip") {
  ExperimentConfig cfg;
  cfg.mode = Mode::kConvex;
  cfg.graph = "ring:5";
  cfg.quantizer = "levels:32";
  cfg.rounds = 77;
  cfg.seed = 123456789012345ULL;
  cfg.alpha = 0.125;
  cfg.objective = "lsq:5x3:2";
  cfg.step_schedule = StepSchedule::kInverseT;
  cfg.gradient_point = GradientPoint::kUnscaled;
  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(back.seed == cfg.seed);
  CHECK(*back.alpha == 0.125);
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const nlohmann::json& j) {
    try {
      config_from_json(j);
    } catch (const ConfigInvalid& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of({{"colour", 3}}) == "colour");
  CHECK(field_of({{"mode", "sweep"}}) == "mode");
  CHECK(field_of({{"quant", "levels:3"}}) == "quant");
  CHECK(field_of({{"rounds", 0}}) == "rounds");
  CHECK(field_of({{"rounds", -4}}) == "rounds");
  CHECK(field_of({{"alpha", -1.0}}) == "alpha");
  CHECK(field_of({{"init", "gaussian"}}) == "init");
  CHECK(field_of({{"step_schedule", "cosine"}}) == "step_schedule");
  CHECK(field_of({{"name", "a/b"}}) == "name");
  CHECK(field_of(nlohmann::json::array()) == "<root>");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("bad graph surfaces as a config error") {
  ExperimentConfig cfg;
  cfg.graph = "torus:3";
  CHECK_THROWS_AS(simulate(cfg), ConfigInvalid);
}

TEST_CASE("gossip run writes the schema") {
  ExperimentConfig cfg;
  cfg.graph = "g1";
  cfg.quantizer = "levels:8";
  cfg.dimension = 1024;
  cfg.rounds = 500;
  cfg.seed = 1;
  cfg.output_dir = scratch("schema").string();
  cfg.name = "g1_levels8";
  const MetricsTrace tr = run(cfg);
  CHECK(tr.rows.size() == 500);
  const std::string csv = slurp(fs::path(cfg.output_dir) / "g1_levels8.csv");
  CHECK(csv.rfind("round,max_err,mean_err,residual_u,mass_drift,cum_bits\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 501);
  const auto bits = tr.column("cum_bits");
  for (std::size_t t = 1; t < bits.size(); ++t) CHECK(bits[t] >= bits[t - 1]);
  const auto meta = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "g1_levels8.meta.json"));
  CHECK(meta.contains("spectral_profile"));
  CHECK(meta.contains("admissibility"));
  CHECK(meta["rows"] == 500);
}

TEST_CASE("reruns are byte-identical") {
  for (Mode mode : {Mode::kGossip, Mode::kConvex, Mode::kNonconvex}) {
    ExperimentConfig cfg;
    cfg.mode = mode;
    cfg.graph = "g2";
    cfg.quantizer = "levels:4";
    cfg.dimension = 16;
    cfg.rounds = 120;
    cfg.seed = 99;
    cfg.objective = mode == Mode::kNonconvex ? "mlp:4:6" : "lsq:10x5:6";
    cfg.name = "r";
    cfg.output_dir = scratch("rerun_a").string();
    run(cfg);
    const auto a_csv = slurp(fs::path(cfg.output_dir) / "r.csv");
    const auto a_meta = slurp(fs::path(cfg.output_dir) / "r.meta.json");
    cfg.output_dir = scratch("rerun_b").string();
    run(cfg);
    CHECK(a_csv == slurp(fs::path(cfg.output_dir) / "r.csv"));
    // The sidecar echoes the output directory; everything else must match.
    auto ja = nlohmann::json::parse(a_meta), jb = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "r.meta.json"));
    ja["config"].erase("out");
    jb["config"].erase("out");
    CHECK(ja.dump() == jb.dump());
  }
}

TEST_CASE("validate mode") {
  ExperimentConfig cfg;
  cfg.mode = Mode::kValidate;
  cfg.output_dir = scratch("validate").string();
  const MetricsTrace tr = run(cfg);
  CHECK(tr.meta["passed"] == true);
  CHECK(fs::exists(fs::path(cfg.output_dir) / "validate.csv"));
}

TEST_CASE("self comparison has unit ratio") {
  ExperimentConfig exact;
  exact.graph = "g1";
  exact.dimension = 32;
  exact.rounds = 400;
  ExperimentConfig same = exact;
  same.name = "other";
  const auto table = bits_to_error(same, exact, {1e-1, 1e-2, 1e-3, 1e-30});
  for (std::size_t k = 0; k < 3; ++k) {
    REQUIRE(table[k].ratio.has_value());
    CHECK(*table[k].ratio == 1.0);
  }
  CHECK_FALSE(table[3].quantized_bits.has_value());
  CHECK_FALSE(table[3].exact_bits.has_value());
  CHECK_FALSE(table[3].ratio.has_value());
  CHECK(format_comparison(table).find("unreached,unreached,n/a") != std::string::npos);
}

TEST_CASE("comparison rejects configs that differ beyond the quantizer") {
  ExperimentConfig a, b;
  a.quantizer = "levels:8";
  b.seed = 2;
  CHECK_THROWS_AS(bits_to_error(a, b, {1e-2}), ConfigInvalid);
}

TEST_CASE("rate fit") {
  MetricsTrace tr;
  tr.columns = {"round", "v", "c", "z"};
  for (int t = 1; t <= 40; ++t) tr.rows.push_back({double(t), std::pow(2.0, -t), 3.0, t == 5 ? 0.0 : 1.0});
  const RateFit geo = rate_fit(tr, "v", 0, 39);
  CHECK(geo.slope == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(geo.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(geo.degenerate);
  const RateFit flat = rate_fit(tr, "c", 0, 39);
  CHECK(flat.slope == 0.0);
  CHECK(flat.r_squared == 0.0);
  CHECK(flat.degenerate);
  CHECK_THROWS_AS(rate_fit(tr, "z", 0, 39), NonPositiveValues);
  CHECK_NOTHROW(rate_fit(tr, "z", 5, 39));
  CHECK_THROWS_AS(rate_fit(tr, "v", 10, 40), std::out_of_range);
  CHECK_THROWS_AS(rate_fit(tr, "nope", 0, 3), std::out_of_range);
}

TEST_CASE("lossless gossip decays no slower than the fitted rate") {
  ExperimentConfig cfg;
  cfg.graph = "g1";
  cfg.dimension = 16;
  cfg.rounds = 600;
  const MetricsTrace tr = simulate(cfg);
  const auto [first, last] = decay_window(tr.column("max_err"));
  const RateFit fit = rate_fit(tr, "max_err", first, last);
  const double lambda = tr.meta["spectral_profile"]["lambda_est"].get<double>();
  CHECK(fit.slope <= std::log(lambda) + 0.05);
}

TEST_CASE("decay window") {
  std::vector<double> v;
  for (int t = 0; t < 100; ++t) v.push_back(t < 60 ? std::pow(0.5, t) : 1e-30);
  const auto [first, last] = decay_window(v);
  CHECK(last == 33);  // 0.5^33 >= 1e-10 > 0.5^34
  CHECK(first == 16);
}
