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

#include "qpush/quantizer.hpp"

#include "qpush/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qpush {

QuantizerSpec QuantizerSpec::identity() { return QuantizerSpec{}; }

QuantizerSpec QuantizerSpec::stochastic(std::uint32_t levels) {
  QuantizerSpec spec;
  spec.kind = QuantizerKind::kStochasticLevels;
  spec.levels = levels;
  spec.validate();
  return spec;
}

void QuantizerSpec::validate() const {
  if (kind == QuantizerKind::kStochasticLevels && !std::has_single_bit(levels)) {
    throw std::invalid_argument("quantizer level count " + std::to_string(levels) +
                                " is not a power of two");
  }
}

std::uint32_t QuantizerSpec::entry_bits() const {
  if (kind == QuantizerKind::kIdentity) return norm_bits;
  return static_cast<std::uint32_t>(std::countr_zero(levels)) + 1;
}

std::string QuantizerSpec::to_string() const {
  if (kind == QuantizerKind::kIdentity) return "identity";
  return "levels:" + std::to_string(levels);
}

QuantizerSpec parse_quantizer(std::string_view text) {
  if (text == "identity") return QuantizerSpec::identity();
  constexpr std::string_view prefix = "levels:";
  if (text.starts_with(prefix)) {
    const auto arg = text.substr(prefix.size());
    std::uint32_t s = 0;
    const auto* end = arg.data() + arg.size();
    auto [ptr, ec] = std::from_chars(arg.data(), end, s);
    if (ec == std::errc() && ptr == end && s > 0) return QuantizerSpec::stochastic(s);
  }
  throw std::invalid_argument("unknown quantizer '" + std::string(text) +
                              "' (expected identity or levels:<s>)");
}

QuantizedMessage quantize(std::span<const double> x, const QuantizerSpec& spec, Rng& rng) {
  QuantizedMessage m;
  m.kind = spec.kind;
  if (spec.kind == QuantizerKind::kIdentity) {
    m.raw.assign(x.begin(), x.end());
    return m;
  }

  const std::size_t d = x.size();
  m.signs.assign(d, 1);
  m.levels.assign(d, 0);
  double sq = 0.0;
  for (double v : x) sq += v * v;
  m.norm = std::sqrt(sq);
  if (m.norm == 0.0) return m;

  const double s = static_cast<double>(spec.levels);
  for (std::size_t i = 0; i < d; ++i) {
    if (x[i] < 0.0) m.signs[i] = -1;
    const double scaled = std::abs(x[i]) / m.norm * s;
    double lower = std::floor(scaled);
    double p_up = scaled - lower;
    // |x_i| can exceed the rounded norm by an ulp; the top level is exact.
    if (lower >= s) {
      lower = s;
      p_up = 0.0;
    }
    const double u = rng.uniform();
    m.levels[i] = static_cast<std::uint32_t>(lower) + (u < p_up ? 1u : 0u);
  }
  return m;
}

Vector dequantize(const QuantizedMessage& m, const QuantizerSpec& spec) {
  if (m.kind != spec.kind) throw MalformedMessage("message kind does not match quantizer");
  if (spec.kind == QuantizerKind::kIdentity) return m.raw;

  if (m.signs.size() != m.levels.size()) {
    throw MalformedMessage("sign and level sequences differ in length");
  }
  if (!(m.norm >= 0.0)) throw MalformedMessage("negative or NaN norm");
  const double s = static_cast<double>(spec.levels);
  Vector out(m.levels.size());
  for (std::size_t i = 0; i < m.levels.size(); ++i) {
    if (m.levels[i] > spec.levels) {
      throw MalformedMessage("level " + std::to_string(m.levels[i]) + " exceeds s = " +
                             std::to_string(spec.levels));
    }
    if (m.norm == 0.0 && m.levels[i] != 0) {
      throw MalformedMessage("zero-norm message carries a nonzero level");
    }
    out[i] = m.norm * static_cast<double>(m.signs[i]) * (static_cast<double>(m.levels[i]) / s);
  }
  return out;
}

double omega_sq(std::size_t d, const QuantizerSpec& spec) {
  if (spec.kind == QuantizerKind::kIdentity) return 0.0;
  const double dd = static_cast<double>(d);
  const double s = static_cast<double>(spec.levels);
  return std::min(dd / (s * s), std::sqrt(dd) / s);
}

std::uint64_t message_bits(std::size_t d, const QuantizerSpec& spec) {
  const std::uint64_t dd = d;
  if (spec.kind == QuantizerKind::kIdentity) return dd * spec.norm_bits + spec.scalar_bits;
  return dd * spec.entry_bits() + spec.norm_bits + spec.scalar_bits;
}

}  // namespace qpush
