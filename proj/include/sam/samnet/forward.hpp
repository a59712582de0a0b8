#pragma once

// Backend-generic forward pass. `Ops` is EagerOps (inference, FLOP counting)
// or Tape (training); both expose the same operation vocabulary.

#include <cmath>
#include <span>
#include <vector>

#include "sam/encoder/encoder.hpp"
#include "sam/numkernel/error.hpp"
#include "sam/numkernel/gru.hpp"
#include "sam/samnet/samnet.hpp"

namespace sam::detail {

template <class Ops>
struct ForwardTrace {
  typename Ops::Value prob;
  std::vector<std::vector<typename Ops::Value>> weights;
  std::size_t gru_steps = 0;
};

template <class Ops, class V>
typename Ops::Value dual_query(Ops& ops, const V& e, const V& v, const V& m) {
  return ops.concat(ops.sub(e, m), ops.sub(e, v), ops.mul(e, m), ops.mul(e, v));
}

template <class Ops, class V, class AW>
typename Ops::Value feed_forward_score(Ops& ops, const V& alpha, const AW& aw) {
  auto hidden = ops.sigmoid(ops.add(ops.matvec(aw.w1, alpha), aw.b1));
  return ops.sigmoid(ops.add(ops.dot(aw.w2, hidden), aw.b2));
}

template <class Ops, class V, class AW>
typename Ops::Value score_row(Ops& ops, const SamConfig& cfg, const AW& aw, const V& e,
                              const V& v, const V& m) {
  if (cfg.variant == Variant::dot_product) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.dim()));
    return ops.sigmoid(ops.scale(ops.add(ops.dot(e, m), ops.dot(e, v)), inv_sqrt_d));
  }
  return feed_forward_score(ops, dual_query(ops, e, v, m), aw);
}

/// One pooling pass: weights for every row against queries (v, m) and the
/// weighted sum of rows. Rows must be non-empty.
template <class Ops, class V, class AW>
typename Ops::Value pool_pass(Ops& ops, const SamConfig& cfg, const AW& aw, const std::vector<V>& rows,
                              const V& v, const V& m, std::vector<V>& weights) {
  weights.clear();
  weights.reserve(rows.size());
  if (cfg.variant == Variant::avg_pool) {
    const double w = 1.0 / static_cast<double>(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) weights.push_back(ops.scalar(w));
  } else {
    for (const auto& e : rows) weights.push_back(score_row(ops, cfg, aw, e, v, m));
  }
  return ops.weighted_sum(std::span<const V>(rows), std::span<const V>(weights));
}

template <class Ops>
ForwardTrace<Ops> sam_forward(Ops& ops, const SamModel& model, const BehaviorSequence& seq,
                              const ItemIds& target, std::span<const double> extra) {
  using V = typename Ops::Value;
  const SamConfig& cfg = model.config();
  const SamSlots& slots = model.slots();
  const EmbeddingTables tables = model.tables();
  if (extra.size() != cfg.extra_dim)
    throw ShapeError("extra features have width " + std::to_string(extra.size()) + ", model expects " +
                     std::to_string(cfg.extra_dim));
  check_ids(target, cfg.embedding);

  ForwardTrace<Ops> trace;
  const std::vector<V> rows = encode_rows(ops, seq, tables, cfg.use_ts_pos);
  const V v = encode_item(ops, target, tables);
  const auto aw = bind_attention(ops, slots.att);

  V memory = v;
  if (cfg.walks()) {
    if (!rows.empty()) {
      const auto gw = bind_gru(ops, slots.walk_gru);
      for (std::size_t n = 0; n < cfg.walk_iters; ++n) {
        std::vector<V> weights;
        V pooled = pool_pass(ops, cfg, aw, rows, v, memory, weights);
        memory = gru_cell(ops, pooled, memory, gw);
        ++trace.gru_steps;
        trace.weights.push_back(std::move(weights));
      }
    }
  } else if (!rows.empty()) {
    std::vector<V> weights;
    memory = pool_pass(ops, cfg, aw, rows, v, v, weights);
    trace.weights.push_back(std::move(weights));
  } else {
    const std::vector<double> zeros(cfg.dim(), 0.0);
    memory = ops.constant(zeros);
  }

  const std::size_t steps = cfg.effective_mem_steps();
  if (steps > 0) {
    typename Ops::ParamRef wu = ops.param(slots.mem_wu);
    const auto gm = bind_gru(ops, slots.mem_gru);
    for (std::size_t s = 0; s < steps; ++s) {
      memory = gru_cell(ops, ops.concat(ops.matvec(wu, memory), v), memory, gm);
      ++trace.gru_steps;
    }
  }

  V hidden = cfg.extra_dim > 0 ? ops.concat(memory, v, ops.constant(extra)) : ops.concat(memory, v);
  for (const auto& layer : slots.mlp)
    hidden = ops.relu(ops.add(ops.matvec(ops.param(layer.w), hidden), ops.param(layer.b)));
  trace.prob =
      ops.sigmoid(ops.add(ops.matvec(ops.param(slots.out.w), hidden), ops.param(slots.out.b)));
  return trace;
}

}  // namespace sam::detail
