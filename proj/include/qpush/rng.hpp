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

#include <cstdint>
#include <random>

namespace qpush {

// Purpose tags mixed into stream ids so that quantization noise, gradient
// sampling, initial values and synthetic data never share a stream.
enum class StreamPurpose : std::uint64_t {
  kQuantize = 1,
  kSample = 2,
  kInit = 3,
  kData = 4,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Counter-based stream id:
///   h0 = splitmix64(master)
///   h1 = splitmix64(h0 ^ node)
///   h2 = splitmix64(h1 ^ round)
///   id = splitmix64(h2 ^ purpose)
/// Any engine that keys its draws by (node, round, purpose) replays the same
/// randomness regardless of execution order.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t node, std::uint64_t round,
                          StreamPurpose purpose) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Rng make_stream(std::uint64_t master, std::uint64_t node, std::uint64_t round,
                       StreamPurpose purpose) {
  return Rng(stream_seed(master, node, round, purpose));
}

}  // namespace qpush
