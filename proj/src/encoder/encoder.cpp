#include "sam/encoder/encoder.hpp"

#include <bit>
#include <string>

#include "sam/numkernel/eager_ops.hpp"
#include "sam/numkernel/error.hpp"

namespace sam {

namespace {

constexpr double kInitRange = 0.05;

Tensor uniform_table(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t(Shape{rows, cols});
  for (double& x : t.data()) x = rng.uniform(-kInitRange, kInitRange);
  return t;
}

void check_one(std::uint32_t id, std::size_t vocab, const char* field) {
  if (id >= vocab)
    throw DataError(std::string(field) + " id " + std::to_string(id) +
                    " is outside vocabulary of size " + std::to_string(vocab));
}

}  // namespace

void EmbeddingConfig::validate() const {
  if (dim == 0 || dim % 4 != 0)
    throw ConfigError("embedding dim must be a positive multiple of 4, got " + std::to_string(dim));
  if (item_vocab == 0 || cate_vocab == 0 || shop_vocab == 0 || brand_vocab == 0)
    throw ConfigError("vocabulary sizes must be positive");
  if (max_len == 0) throw ConfigError("max_len must be positive");
}

EmbeddingTables register_embeddings(ParamSet& params, const EmbeddingConfig& config, Rng& rng) {
  config.validate();
  const std::size_t fd = config.field_dim();
  EmbeddingSlots s;
  s.item = params.add("emb.item", uniform_table(config.item_vocab, fd, rng));
  s.cate = params.add("emb.cate", uniform_table(config.cate_vocab, fd, rng));
  s.shop = params.add("emb.shop", uniform_table(config.shop_vocab, fd, rng));
  s.brand = params.add("emb.brand", uniform_table(config.brand_vocab, fd, rng));
  s.time = params.add("emb.time", uniform_table(config.max_time_bucket + 1, config.dim, rng));
  s.pos = params.add("emb.pos", uniform_table(config.max_len, config.dim, rng));
  return {config, s};
}

std::size_t bucketize_time(std::int64_t elapsed_seconds, std::size_t max_bucket) {
  if (elapsed_seconds < 0)
    throw DataError("event timestamp is " + std::to_string(-elapsed_seconds) +
                    "s after the ranking time");
  if (elapsed_seconds < 1) return 0;
  // bit_width(x) = floor(log2 x) + 1 for x >= 1
  const auto bucket = static_cast<std::size_t>(std::bit_width(static_cast<std::uint64_t>(elapsed_seconds)));
  return bucket < max_bucket ? bucket : max_bucket;
}

std::size_t position_index(std::size_t j, std::size_t length) {
  if (j < 1 || j > length)
    throw ShapeError("position_index: j=" + std::to_string(j) + " outside [1, " +
                     std::to_string(length) + "]");
  return length - j + 1;
}

void check_ids(const ItemIds& ids, const EmbeddingConfig& config) {
  check_one(ids.item, config.item_vocab, "item");
  check_one(ids.cate, config.cate_vocab, "cate");
  check_one(ids.shop, config.shop_vocab, "shop");
  check_one(ids.brand, config.brand_vocab, "brand");
}

void check_sequence(const BehaviorSequence& seq, const EmbeddingConfig& config) {
  if (seq.size() > config.max_len)
    throw DataError("sequence length " + std::to_string(seq.size()) + " exceeds max_len " +
                    std::to_string(config.max_len));
  for (std::size_t j = 0; j < seq.size(); ++j) {
    const auto& ev = seq.events[j];
    check_ids(ev.ids, config);
    if (j > 0 && ev.ts < seq.events[j - 1].ts)
      throw DataError("event " + std::to_string(j + 1) + " has timestamp " + std::to_string(ev.ts) +
                      " earlier than its predecessor " + std::to_string(seq.events[j - 1].ts));
    if (ev.ts > seq.rank_ts)
      throw DataError("event " + std::to_string(j + 1) + " timestamp " + std::to_string(ev.ts) +
                      " is after rank_ts " + std::to_string(seq.rank_ts));
  }
}

Tensor encode_sequence(const BehaviorSequence& seq, const ParamSet& params,
                       const EmbeddingTables& tables, bool use_ts_pos) {
  EagerOps ops(params);
  const auto rows = encode_rows(ops, seq, tables, use_ts_pos);
  Tensor out(Shape{rows.size(), tables.config.dim});
  for (std::size_t j = 0; j < rows.size(); ++j)
    std::copy(rows[j].data().begin(), rows[j].data().end(), out.row(j).begin());
  return out;
}

Tensor embed_target(const ItemIds& target, const ParamSet& params, const EmbeddingTables& tables) {
  check_ids(target, tables.config);
  EagerOps ops(params);
  return encode_item(ops, target, tables);
}

}  // namespace sam
