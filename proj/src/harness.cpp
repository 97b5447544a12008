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

#include "qpush/harness.hpp"

#include "qpush/consensus.hpp"
#include "qpush/errors.hpp"
#include "qpush/optimizer.hpp"
#include "qpush/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace qpush {

namespace {

MetricsTrace validation_trace(const ExperimentConfig& cfg) {
  const std::vector<CheckResult> checks = run_validation_suite();
  MetricsTrace trace;
  trace.columns = {"check", "passed", "value", "tolerance"};
  nlohmann::json list = nlohmann::json::array();
  bool all = true;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const CheckResult& c = checks[i];
    trace.rows.push_back({static_cast<double>(i + 1), c.passed ? 1.0 : 0.0, c.value, c.tolerance});
    list.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value},
                    {"tolerance", c.tolerance}, {"detail", c.detail}});
    all = all && c.passed;
  }
  trace.meta["config"] = config_to_json(cfg);
  trace.meta["checks"] = list;
  trace.meta["passed"] = all;
  return trace;
}

std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

MetricsTrace simulate(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::kGossip: return run_gossip(cfg);
    case Mode::kConvex:
    case Mode::kNonconvex: return run_optimization(cfg);
    case Mode::kValidate: return validation_trace(cfg);
  }
  throw ConfigInvalid("mode", "unsupported mode");
}

std::string to_csv(const MetricsTrace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.columns.size(); ++i) {
    if (i) out += ',';
    out += trace.columns[i];
  }
  out += '\n';
  for (const auto& row : trace.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_outputs(const MetricsTrace& trace, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
  const fs::path base = fs::path(cfg.output_dir) / cfg.stem();
  auto write = [](const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw IoError("failed writing '" + path.string() + "'");
  };
  write(base.string() + ".csv", to_csv(trace));
  write(base.string() + ".meta.json", trace.meta.dump(2) + "\n");
}

MetricsTrace run(const ExperimentConfig& cfg) {
  validate_config(cfg);
  MetricsTrace trace = simulate(cfg);
  write_outputs(trace, cfg);
  return trace;
}

std::vector<double> relative_error(const MetricsTrace& trace) {
  std::vector<double> values;
  double base = 0.0;
  if (trace.meta.contains("initial_max_err")) {
    values = trace.column("max_err");
    base = trace.meta.at("initial_max_err").get<double>();
  } else if (trace.meta.contains("initial_gap")) {
    values = trace.column("gap_node1_avg");
    base = trace.meta.at("initial_gap").get<double>();
  } else {
    throw std::invalid_argument("trace carries no error metric");
  }
  for (double& v : values) v = base > 0.0 ? v / base : v;
  return values;
}

std::vector<BitsAtTarget> bits_to_error(const MetricsTrace& quantized, const MetricsTrace& exact,
                                        const std::vector<double>& targets) {
  const std::vector<double> eq = relative_error(quantized), ee = relative_error(exact);
  const std::vector<double> bq = quantized.column("cum_bits"), be = exact.column("cum_bits");
  auto first_hit = [](const std::vector<double>& err, const std::vector<double>& bits,
                      double target) -> std::optional<std::uint64_t> {
    for (std::size_t t = 0; t < err.size(); ++t) {
      if (err[t] <= target) return static_cast<std::uint64_t>(bits[t]);
    }
    return std::nullopt;
  };
  std::vector<BitsAtTarget> table;
  for (double target : targets) {
    BitsAtTarget row;
    row.target = target;
    row.quantized_bits = first_hit(eq, bq, target);
    row.exact_bits = first_hit(ee, be, target);
    if (row.quantized_bits && row.exact_bits && *row.quantized_bits > 0) {
      row.ratio = static_cast<double>(*row.exact_bits) / static_cast<double>(*row.quantized_bits);
    }
    table.push_back(row);
  }
  return table;
}

std::vector<BitsAtTarget> bits_to_error(const ExperimentConfig& quantized,
                                        const ExperimentConfig& exact,
                                        const std::vector<double>& targets) {
  if (quantized.mode == Mode::kValidate || exact.mode == Mode::kValidate) {
    throw ConfigInvalid("mode", "comparison needs gossip, convex or nonconvex runs");
  }
  nlohmann::json a = config_to_json(quantized), b = config_to_json(exact);
  for (const char* key : {"quant", "norm_bits", "scalar_bits", "name", "out"}) {
    a.erase(key);
    b.erase(key);
  }
  for (const auto& [key, value] : a.items()) {
    if (b.at(key) != value) {
      throw ConfigInvalid(key, "compared configs differ in a field other than the quantizer");
    }
  }
  return bits_to_error(simulate(quantized), simulate(exact), targets);
}

std::string format_comparison(const std::vector<BitsAtTarget>& table) {
  std::ostringstream os;
  os << "target,quantized_bits,exact_bits,ratio\n";
  for (const auto& row : table) {
    os << format_double(row.target, "%g") << ',';
    os << (row.quantized_bits ? std::to_string(*row.quantized_bits) : "unreached") << ',';
    os << (row.exact_bits ? std::to_string(*row.exact_bits) : "unreached") << ',';
    os << (row.ratio ? format_double(*row.ratio) : "n/a") << '\n';
  }
  return os.str();
}

RateFit log_linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionMismatch("fit inputs differ in length");
  RateFit fit;
  const std::size_t m = x.size();
  std::vector<double> ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw NonPositiveValues("value " + format_double(y[i]) + " at position " + std::to_string(i) +
                              " cannot be log-fitted");
    }
    ly[i] = std::log(y[i]);
  }
  if (m < 2) {
    fit.degenerate = true;
    if (m == 1) fit.intercept = ly[0];
    return fit;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += ly[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    fit.degenerate = true;
    fit.intercept = my;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (std::all_of(ly.begin(), ly.end(), [&](double v) { return v == ly.front(); })) {
    fit.slope = 0.0;
    fit.degenerate = true;
    return fit;
  }
  fit.r_squared = (sxy * sxy) / (sxx * syy);
  return fit;
}

std::pair<std::size_t, std::size_t> decay_window(const std::vector<double>& values,
                                                 double floor_fraction) {
  if (values.empty()) return {0, 0};
  const double floor = values.front() * floor_fraction;
  std::size_t end = 0;
  while (end + 1 < values.size() && values[end + 1] >= floor && std::isfinite(values[end + 1])) ++end;
  return {end / 2, end};
}

RateFit rate_fit(const MetricsTrace& trace, std::string_view column, std::size_t first,
                 std::size_t last) {
  if (first > last || last >= trace.rows.size()) {
    throw std::out_of_range("fit window [" + std::to_string(first) + ", " + std::to_string(last) +
                            "] is outside the trace");
  }
  const std::size_t ci = trace.column_index(column);
  const std::size_t ri = trace.column_index("round");
  std::vector<double> x, y;
  for (std::size_t t = first; t <= last; ++t) {
    x.push_back(trace.rows[t][ri]);
    y.push_back(trace.rows[t][ci]);
  }
  return log_linear_fit(x, y);
}

}  // namespace qpush
