#include <string>

#include "doctest.h"
#include "sam/encoder/encoder.hpp"
#include "sam/numkernel/error.hpp"
#include "test_util.hpp"

using namespace sam;

namespace {

struct Fixture {
  ParamSet params;
  EmbeddingTables tables;

  explicit Fixture(std::size_t max_len = 8, std::uint64_t seed = 3) {
    EmbeddingConfig cfg;
    cfg.dim = 8;
    cfg.item_vocab = 10;
    cfg.cate_vocab = 3;
    cfg.shop_vocab = 4;
    cfg.brand_vocab = 5;
    cfg.max_len = max_len;
    Rng rng(seed);
    tables = register_embeddings(params, cfg, rng);
  }
};

// Concatenation oracle: the four quarter-width table rows side by side.
std::vector<double> concat_rows(const ParamSet& p, const EmbeddingSlots& s, const ItemIds& ids) {
  std::vector<double> out;
  for (auto [slot, id] : {std::pair{s.item, ids.item}, std::pair{s.cate, ids.cate},
                          std::pair{s.shop, ids.shop}, std::pair{s.brand, ids.brand}}) {
    const auto row = p[slot].row(id);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace

TEST_CASE("bucketize_time table") {
  CHECK(bucketize_time(0) == 0);
  CHECK(bucketize_time(1) == 1);
  CHECK(bucketize_time(2) == 2);
  CHECK(bucketize_time(3) == 2);
  CHECK(bucketize_time(4) == 3);
  CHECK(bucketize_time(1000) == 10);
  CHECK(bucketize_time(std::int64_t{1} << 40) == kMaxTimeBucket);
  CHECK(bucketize_time(1000, 5) == 5);
  CHECK_THROWS_AS(bucketize_time(-1), DataError);
}

TEST_CASE("bucketize_time is monotone and constant on dyadic intervals") {
  std::size_t prev = 0;
  for (std::int64_t e = 0; e < 70000; ++e) {
    const std::size_t b = bucketize_time(e);
    CHECK(b >= prev);
    prev = b;
  }
  for (int k = 0; k < 30; ++k) {
    const std::int64_t lo = std::int64_t{1} << k, hi = (std::int64_t{1} << (k + 1)) - 1;
    CHECK(bucketize_time(lo) == bucketize_time(hi));
    CHECK(bucketize_time(lo) == static_cast<std::size_t>(k + 1));
  }
}

TEST_CASE("position_index examples") {
  CHECK(position_index(5, 5) == 1);
  CHECK(position_index(1, 5) == 5);
  CHECK(position_index(3, 1000) == 998);
  CHECK_THROWS_AS(position_index(0, 5), ShapeError);
  CHECK_THROWS_AS(position_index(6, 5), ShapeError);
  for (std::size_t len : {1, 2, 7, 300}) CHECK(position_index(len, len) == 1);
}

TEST_CASE("table shapes follow the configuration") {
  Fixture f;
  const auto& s = f.tables.slots;
  CHECK(f.params[s.item].shape() == Shape{10, 2});
  CHECK(f.params[s.cate].shape() == Shape{3, 2});
  CHECK(f.params[s.time].shape() == Shape{kMaxTimeBucket + 1, 8});
  CHECK(f.params[s.pos].shape() == Shape{8, 8});
  for (std::size_t i = 0; i < f.params.size(); ++i)
    for (double x : f.params.at(i).data()) CHECK((x >= -0.05 && x <= 0.05));
}

TEST_CASE("empty sequence encodes to an empty matrix") {
  Fixture f;
  BehaviorSequence seq;
  seq.rank_ts = 10;
  const Tensor e = encode_sequence(seq, f.params, f.tables, true);
  CHECK(e.rows() == 0);
  CHECK(e.size() == 0);
}

TEST_CASE("all-zero tables give a zero matrix") {
  Fixture f;
  testutil::zero_all(f.params);
  Rng rng(1);
  BehaviorSequence seq = testutil::random_sequence(5, rng);
  for (auto& ev : seq.events) ev.ids.item %= 10;
  const Tensor e = encode_sequence(seq, f.params, f.tables, true);
  CHECK(e.shape() == Shape{5, 8});
  for (double x : e.data()) CHECK(x == 0.0);
  CHECK(embed_target(testutil::ids(4), f.params, f.tables) == Tensor(Shape{8}));
}

TEST_CASE("single event without time and position is the concatenated lookup") {
  Fixture f;
  BehaviorSequence seq;
  seq.rank_ts = 100;
  seq.events.push_back({{7, 2, 1, 4}, 90});
  const Tensor e = encode_sequence(seq, f.params, f.tables, false);
  const auto want = concat_rows(f.params, f.tables.slots, {7, 2, 1, 4});
  REQUIRE(e.shape() == Shape{1, 8});
  for (std::size_t i = 0; i < 8; ++i) CHECK(e.at(0, i) == want[i]);
}

TEST_CASE("time and position embeddings are summed on each row") {
  Fixture f;
  BehaviorSequence seq;
  seq.rank_ts = 1000;
  seq.events.push_back({{1, 1, 1, 1}, 0});    // elapsed 1000 -> bucket 10, position 3
  seq.events.push_back({{2, 2, 2, 2}, 997});  // elapsed 3 -> bucket 2, position 2
  seq.events.push_back({{3, 0, 3, 3}, 1000}); // elapsed 0 -> bucket 0, position 1
  const Tensor e = encode_sequence(seq, f.params, f.tables, true);
  const std::size_t buckets[] = {10, 2, 0};
  const std::size_t positions[] = {3, 2, 1};
  const auto& s = f.tables.slots;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto item = concat_rows(f.params, s, seq.events[j].ids);
    const auto t = f.params[s.time].row(buckets[j]);
    const auto p = f.params[s.pos].row(positions[j] - 1);
    for (std::size_t i = 0; i < 8; ++i) CHECK(e.at(j, i) == (item[i] + t[i]) + p[i]);
  }
}

TEST_CASE("target shares the id tables with sequence items") {
  Fixture f;
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ItemIds ids{static_cast<std::uint32_t>(rng.below(10)), static_cast<std::uint32_t>(rng.below(3)),
                      static_cast<std::uint32_t>(rng.below(4)), static_cast<std::uint32_t>(rng.below(5))};
    BehaviorSequence seq;
    seq.rank_ts = 50;
    seq.events.push_back({ids, 40});
    const Tensor row = encode_sequence(seq, f.params, f.tables, false);
    const Tensor v = embed_target(ids, f.params, f.tables);
    const auto want = concat_rows(f.params, f.tables.slots, ids);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(v[i] == row.at(0, i));
      CHECK(v[i] == want[i]);
    }
  }
}

TEST_CASE("most recent event gets position 1 regardless of length") {
  Fixture f(8);
  testutil::zero_all(f.params);
  // Only the position table is non-zero: row k holds the value k + 1.
  auto& pos = f.params[f.tables.slots.pos];
  for (std::size_t r = 0; r < pos.rows(); ++r)
    for (double& x : pos.row(r)) x = static_cast<double>(r + 1);
  for (std::size_t len : {2, 5, 8}) {
    BehaviorSequence seq;
    seq.rank_ts = 100;
    for (std::size_t j = 0; j < len; ++j) seq.events.push_back({{0, 0, 0, 0}, 100});
    const Tensor e = encode_sequence(seq, f.params, f.tables, true);
    CHECK(e.at(len - 1, 0) == 1.0);
    CHECK(e.at(0, 0) == static_cast<double>(len));
  }
}

TEST_CASE("encoder error paths name the field") {
  Fixture f(3);
  BehaviorSequence seq;
  seq.rank_ts = 100;
  seq.events.push_back({{1, 1, 9, 1}, 50});
  try {
    encode_sequence(seq, f.params, f.tables, false);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("shop") != std::string::npos);
  }
  seq.events[0].ids.shop = 0;
  seq.events.push_back({{1, 1, 1, 1}, 40});  // out of order
  CHECK_THROWS_AS(encode_sequence(seq, f.params, f.tables, false), DataError);
  seq.events.pop_back();
  seq.events.push_back({{1, 1, 1, 1}, 150});  // after rank_ts
  CHECK_THROWS_AS(encode_sequence(seq, f.params, f.tables, true), DataError);
  seq.events.back().ts = 60;
  seq.events.push_back({{1, 1, 1, 1}, 70});
  seq.events.push_back({{1, 1, 1, 1}, 80});  // 4 > max_len 3
  CHECK_THROWS_AS(encode_sequence(seq, f.params, f.tables, true), DataError);
  CHECK_THROWS_AS(embed_target({10, 0, 0, 0}, f.params, f.tables), DataError);
}

TEST_CASE("dimension must split into four quarters") {
  EmbeddingConfig cfg;
  cfg.dim = 6;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
