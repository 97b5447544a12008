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

#include "qpush/quantizer.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qpush {

// Local copy of an in-neighbor's auxiliary vector x_hat_j.
struct Replica {
  std::size_t source = 0;
  Vector value;
};

/// State shared by the gossip and optimization engines: the working vector,
/// the node's own auxiliary vector, replicas of every in-neighbor's auxiliary
/// vector, and the push-sum weight.
struct PushSumCore {
  std::size_t id = 0;
  Vector x;
  Vector x_hat_self;
  std::vector<Replica> x_hat_in;  // sorted by source
  double y = 1.0;
};

struct RoundContext {
  std::uint64_t seed = 0;
  std::size_t round = 1;           // t, starting at 1
  std::size_t audit_interval = 50;  // 0 disables the audit
};

// Throws ReplicaDivergence if any replica of x_hat_j differs from node j's
// own copy by more than `tolerance` in any coordinate.
template <class Node>
void audit_replicas(const std::vector<Node>& nodes, double tolerance = 1e-12);

}  // namespace qpush

#include "qpush/push_sum_inl.hpp"
