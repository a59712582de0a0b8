#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sam/numkernel/params.hpp"
#include "sam/numkernel/random.hpp"
#include "sam/numkernel/tensor.hpp"

namespace sam {

/// The four categorical ids describing an item.
struct ItemIds {
  std::uint32_t item = 0;
  std::uint32_t cate = 0;
  std::uint32_t shop = 0;
  std::uint32_t brand = 0;
  friend bool operator==(const ItemIds&, const ItemIds&) = default;
};

struct BehaviorEvent {
  ItemIds ids;
  std::int64_t ts = 0;  // unix seconds
  friend bool operator==(const BehaviorEvent&, const BehaviorEvent&) = default;
};

/// Chronologically ordered clicks preceding the scoring moment `rank_ts`.
struct BehaviorSequence {
  std::vector<BehaviorEvent> events;
  std::int64_t rank_ts = 0;
  std::size_t size() const noexcept { return events.size(); }
  friend bool operator==(const BehaviorSequence&, const BehaviorSequence&) = default;
};

inline constexpr std::size_t kMaxTimeBucket = 32;

struct EmbeddingConfig {
  std::size_t dim = 16;  // d_i; must be divisible by 4
  std::size_t item_vocab = 1;
  std::size_t cate_vocab = 1;
  std::size_t shop_vocab = 1;
  std::size_t brand_vocab = 1;
  std::size_t max_len = 1;  // rows of the position table
  std::size_t max_time_bucket = kMaxTimeBucket;

  void validate() const;
  std::size_t field_dim() const noexcept { return dim / 4; }
};

struct EmbeddingSlots {
  ParamId item, cate, shop, brand, time, pos;
};

/// Configuration plus the slots of the six lookup tables in a ParamSet.
struct EmbeddingTables {
  EmbeddingConfig config;
  EmbeddingSlots slots;
};

/// Registers the six tables in `params`, initialised uniform in [-0.05, 0.05].
EmbeddingTables register_embeddings(ParamSet& params, const EmbeddingConfig& config, Rng& rng);

/// 0 for elapsed < 1, else floor(log2(elapsed)) + 1, clamped to max_bucket.
/// Negative elapsed time means the event postdates the ranking time and is
/// rejected with DataError.
std::size_t bucketize_time(std::int64_t elapsed_seconds, std::size_t max_bucket = kMaxTimeBucket);

/// Recency position for the 1-based chronological index j: the most recent
/// event is 1, the oldest is L.
std::size_t position_index(std::size_t j, std::size_t length);

/// Throws DataError naming the field if any id is outside its vocabulary.
void check_ids(const ItemIds& ids, const EmbeddingConfig& config);

/// Throws DataError if the sequence is too long, out of order, or contains
/// events after rank_ts or out-of-vocabulary ids.
void check_sequence(const BehaviorSequence& seq, const EmbeddingConfig& config);

/// [item || cate || shop || brand] embedding of one item.
template <class Ops>
typename Ops::Value encode_item(Ops& ops, const ItemIds& ids, const EmbeddingTables& tables) {
  const auto& s = tables.slots;
  return ops.concat(ops.lookup(s.item, ids.item), ops.lookup(s.cate, ids.cate),
                    ops.lookup(s.shop, ids.shop), ops.lookup(s.brand, ids.brand));
}

/// One row per event: item embedding, plus time-bucket and position
/// embeddings when `use_ts_pos` is set.
template <class Ops>
std::vector<typename Ops::Value> encode_rows(Ops& ops, const BehaviorSequence& seq,
                                             const EmbeddingTables& tables, bool use_ts_pos) {
  check_sequence(seq, tables.config);
  std::vector<typename Ops::Value> rows;
  rows.reserve(seq.size());
  const std::size_t len = seq.size();
  for (std::size_t j = 0; j < len; ++j) {
    const auto& ev = seq.events[j];
    auto row = encode_item(ops, ev.ids, tables);
    if (use_ts_pos) {
      const std::size_t bucket =
          bucketize_time(seq.rank_ts - ev.ts, tables.config.max_time_bucket);
      const std::size_t pos = position_index(j + 1, len);
      row = ops.add(ops.add(row, ops.lookup(tables.slots.time, bucket)),
                    ops.lookup(tables.slots.pos, pos - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// L x d_i matrix of encoded rows.
Tensor encode_sequence(const BehaviorSequence& seq, const ParamSet& params,
                       const EmbeddingTables& tables, bool use_ts_pos);

/// d_i embedding of the target item through the shared id tables.
Tensor embed_target(const ItemIds& target, const ParamSet& params, const EmbeddingTables& tables);

}  // namespace sam
