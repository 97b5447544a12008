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

#include "qpush/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpush {

using Vector = std::vector<double>;

enum class QuantizerKind { kIdentity, kStochasticLevels };

/// Quantization policy. For the stochastic kind `levels` (s) must be a power
/// of two so that each entry costs log2(s) + 1 bits including the sign.
struct QuantizerSpec {
  QuantizerKind kind = QuantizerKind::kIdentity;
  std::uint32_t levels = 1;
  std::uint32_t norm_bits = 54;
  std::uint32_t scalar_bits = 54;

  static QuantizerSpec identity();
  static QuantizerSpec stochastic(std::uint32_t levels);

  // Throws std::invalid_argument if levels is zero or not a power of two.
  void validate() const;
  std::uint32_t entry_bits() const;
  // "identity" or "levels:<s>".
  std::string to_string() const;
};

// Parses "identity" or "levels:<s>".
QuantizerSpec parse_quantizer(std::string_view text);

/// Encoded payload of one node for one round.
struct QuantizedMessage {
  QuantizerKind kind = QuantizerKind::kIdentity;
  double norm = 0.0;
  std::vector<std::int8_t> signs;     // +1 / -1
  std::vector<std::uint32_t> levels;  // each in [0, s]
  Vector raw;                         // identity kind only
  double y = 1.0;                     // piggybacked push-sum weight

  std::size_t dimension() const {
    return kind == QuantizerKind::kIdentity ? raw.size() : levels.size();
  }
};

/// Unbiased stochastic rounding onto s levels of |x_i| / ||x||.
/// The stochastic kind consumes exactly one uniform per coordinate, in
/// coordinate order, unless x is the zero vector (no draws at all).
QuantizedMessage quantize(std::span<const double> x, const QuantizerSpec& spec, Rng& rng);

// Throws MalformedMessage on a level above s or inconsistent fields.
Vector dequantize(const QuantizedMessage& m, const QuantizerSpec& spec);

// min(d / s^2, sqrt(d) / s); zero for the identity kind.
double omega_sq(std::size_t d, const QuantizerSpec& spec);

// Bits on one channel for one round, including the y scalar.
std::uint64_t message_bits(std::size_t d, const QuantizerSpec& spec);

}  // namespace qpush
