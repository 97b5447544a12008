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

#include "qpush/errors.hpp"
#include "qpush/graph.hpp"

#include <cmath>
#include <string>

namespace qpush {

template <class Node>
void audit_replicas(const std::vector<Node>& nodes, double tolerance) {
  for (const Node& node : nodes) {
    for (const Replica& r : node.x_hat_in) {
      const Vector& own = nodes.at(r.source).x_hat_self;
      for (std::size_t k = 0; k < own.size(); ++k) {
        if (!(std::abs(own[k] - r.value[k]) <= tolerance)) {
          throw ReplicaDivergence("node " + std::to_string(node.id) + " holds a replica of node " +
                                  std::to_string(r.source) + " that differs at coordinate " +
                                  std::to_string(k));
        }
      }
    }
  }
}

namespace detail {

struct ExchangeOutcome {
  std::vector<Vector> mixed;  // x_i(t) + sum_j (A - I)_ij x_hat_j(t+1)
  std::uint64_t bits = 0;
  double residual_sq = 0.0;   // ||X(t) - X_hat(t+1)||_F^2
};

/// Quantization and averaging halves of one synchronous round. Reads every
/// node's round-t fields from `prev`, writes x_hat and y of round t+1 into
/// `next` (which must start as a copy of `prev`), and returns the mixed
/// vectors for the caller's x (gossip) or w (optimization) update.
template <class Node>
ExchangeOutcome quantized_exchange(const std::vector<Node>& prev, std::vector<Node>& next,
                                   const ColumnStochasticMatrix& a, const QuantizerSpec& spec,
                                   const RoundContext& ctx) {
  const std::size_t n = prev.size();
  const std::size_t d = n == 0 ? 0 : prev[0].x.size();

  std::vector<Vector> decoded(n);
  std::vector<double> sent_y(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector diff(d);
    for (std::size_t k = 0; k < d; ++k) diff[k] = prev[i].x[k] - prev[i].x_hat_self[k];
    Rng rng = make_stream(ctx.seed, i, ctx.round, StreamPurpose::kQuantize);
    QuantizedMessage msg = quantize(diff, spec, rng);
    msg.y = prev[i].y;
    decoded[i] = dequantize(msg, spec);
    sent_y[i] = msg.y;
  }

  ExchangeOutcome out;
  const std::uint64_t per_message = message_bits(d, spec);
  for (std::size_t i = 0; i < n; ++i) {
    Node& node = next[i];
    for (std::size_t k = 0; k < d; ++k) node.x_hat_self[k] = prev[i].x_hat_self[k] + decoded[i][k];
    for (std::size_t r = 0; r < node.x_hat_in.size(); ++r) {
      const Replica& old = prev[i].x_hat_in[r];
      Vector& value = node.x_hat_in[r].value;
      for (std::size_t k = 0; k < d; ++k) value[k] = old.value[k] + decoded[old.source][k];
    }
    out.bits += per_message * node.x_hat_in.size();
  }

  // Row i of X(t) + (A - I) X_hat(t+1), summed over sources in increasing
  // order with the self term in its sorted place. The matrix-form reference
  // sums in the same order, so both agree to the last bit.
  out.mixed.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = next[i];
    Vector acc(d, 0.0);
    double y = 0.0;
    auto add = [&](std::size_t j, double coef, const Vector& value) {
      for (std::size_t k = 0; k < d; ++k) acc[k] += coef * value[k];
      y += a(i, j) * sent_y[j];
    };
    bool self_done = false;
    for (const Replica& r : node.x_hat_in) {
      if (!self_done && r.source > i) {
        add(i, a(i, i) - 1.0, node.x_hat_self);
        self_done = true;
      }
      add(r.source, a(i, r.source), r.value);
    }
    if (!self_done) add(i, a(i, i) - 1.0, node.x_hat_self);

    Vector mixed(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double gap = prev[i].x[k] - node.x_hat_self[k];
      out.residual_sq += gap * gap;
      mixed[k] = prev[i].x[k] + acc[k];
    }
    out.mixed[i] = std::move(mixed);
    next[i].y = y;
  }

  if (ctx.audit_interval > 0 && ctx.round % ctx.audit_interval == 0) audit_replicas(next);
  return out;
}

}  // namespace detail
}  // namespace qpush
