#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "sam/data/checkpoint.hpp"
#include "sam/data/corpus.hpp"
#include "sam/data/synth.hpp"
#include "sam/numkernel/error.hpp"
#include "test_util.hpp"

using namespace sam;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sam_test_" + name)).string();
}

bool contains(const std::vector<Sample>::value_type& s, std::uint32_t item) {
  for (const auto& ev : s.sequence.events)
    if (ev.ids.item == item) return true;
  return false;
}

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

SynthSpec big_spec(SynthTask task, std::uint64_t seed) {
  SynthSpec s;
  s.task = task;
  s.num_samples = 20000;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("corpus: empty input gives an empty corpus") {
  CHECK(parse_corpus_text("").empty());
  CHECK(parse_corpus_text("\n\n").empty());
  const std::string path = temp_path("empty.tsv");
  { std::ofstream(path) << ""; }
  CHECK(parse_corpus(path).empty());
  std::filesystem::remove(path);
}

TEST_CASE("corpus: one line parses to exact fields") {
  const auto c = parse_corpus_text("1\t5:1:2:3\t7:0:1:2:100,8:1:0:3:150\t200\n");
  REQUIRE(c.size() == 1);
  const Sample& s = c[0];
  CHECK(s.label == 1);
  CHECK(s.target == ItemIds{5, 1, 2, 3});
  CHECK(s.sequence.rank_ts == 200);
  REQUIRE(s.sequence.events.size() == 2);
  CHECK(s.sequence.events[0].ids == ItemIds{7, 0, 1, 2});
  CHECK(s.sequence.events[0].ts == 100);
  CHECK(s.sequence.events[1].ids == ItemIds{8, 1, 0, 3});
  CHECK(s.sequence.events[1].ts == 150);
  CHECK(s.line == 1);
  CHECK(format_sample(s) == "1\t5:1:2:3\t7:0:1:2:100,8:1:0:3:150\t200");
}

TEST_CASE("corpus: empty sequence column is allowed") {
  const auto c = parse_corpus_text("0\t1:1:1:1\t\t9\n");
  REQUIRE(c.size() == 1);
  CHECK(c[0].sequence.events.empty());
  CHECK(format_corpus(c) == "0\t1:1:1:1\t\t9\n");
}

TEST_CASE("corpus: print(parse(x)) round trips generated corpora") {
  SynthSpec spec;
  spec.num_samples = 300;
  spec.seq_len = 12;
  const auto samples = generate_synthetic(spec);
  const std::string text = format_corpus(samples);
  const auto back = parse_corpus_text(text);
  CHECK(back == samples);
  CHECK(format_corpus(back) == text);

  const std::string path = temp_path("roundtrip.tsv");
  write_corpus(path, samples);
  CHECK(parse_corpus(path) == samples);
  std::filesystem::remove(path);
}

TEST_CASE("corpus: decreasing timestamps are rejected at the offending line") {
  const std::string text =
      "1\t1:1:1:1\t2:2:2:2:10,3:3:3:3:20\t30\n"
      "0\t1:1:1:1\t2:2:2:2:10,3:3:3:3:5\t30\n";
  const std::string msg = error_of([&] { parse_corpus_text(text); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("events") != std::string::npos);
  CHECK_THROWS_AS(parse_corpus_text(text), DataError);
}

TEST_CASE("corpus: malformed lines name line and column") {
  CHECK(error_of([] { parse_corpus_text("2\t1:1:1:1\t\t9"); }).find("line 1, column 1") != std::string::npos);
  CHECK(error_of([] { parse_corpus_text("\n1\t1:1:1\t\t9"); }).find("line 2, column 2") != std::string::npos);
  CHECK(error_of([] { parse_corpus_text("1\t1:1:1:1\t1:1:1:1:x\t9"); }).find("column 3") != std::string::npos);
  CHECK(error_of([] { parse_corpus_text("1\t1:1:1:1\t\t-4"); }).find("column 4") != std::string::npos);
  CHECK(error_of([] { parse_corpus_text("1\t1:1:1:1\t1:1:1:1:50\t9"); }).find("rank_ts") != std::string::npos);
  CHECK(error_of([] { parse_corpus_text("1\t1:1:1:1"); }).find("expected 4") != std::string::npos);
  CHECK_THROWS_AS(parse_corpus("/nonexistent/corpus.tsv"), DataError);
}

TEST_CASE("corpus_stats") {
  const auto c = parse_corpus_text(
      "1\t5:1:2:3\t7:0:1:2:100,8:1:0:3:150\t200\n"
      "0\t9:0:6:0\t\t10\n");
  const CorpusStats s = corpus_stats(c);
  CHECK(s.item_vocab == 10);
  CHECK(s.cate_vocab == 2);
  CHECK(s.shop_vocab == 7);
  CHECK(s.brand_vocab == 4);
  CHECK(s.max_len == 2);
  CHECK(s.positives == 1);
}

TEST_CASE("synth: without noise positives are exactly {x, y}") {
  SynthSpec spec;
  spec.seq_len = 2;
  spec.noise_ratio = 0.0;
  spec.num_samples = 400;
  for (const Sample& s : generate_synthetic(spec)) {
    const std::uint32_t z = s.target.item, x = z - 2, y = z - 1;
    CHECK(z % 3 == 2);
    REQUIRE(s.sequence.events.size() == 2);
    if (s.label == 1) {
      std::vector<std::uint32_t> got{s.sequence.events[0].ids.item, s.sequence.events[1].ids.item};
      std::sort(got.begin(), got.end());
      CHECK(got == std::vector<std::uint32_t>{x, y});
    } else {
      CHECK((contains(s, x) != contains(s, y)));
    }
  }
}

TEST_CASE("synth: class balance and single-partner marginal") {
  const auto c = generate_synthetic(big_spec(SynthTask::compositional, 3));
  std::size_t pos = 0, neg = 0, neg_with_x = 0;
  for (const Sample& s : c) {
    if (s.label == 1) {
      ++pos;
    } else {
      ++neg;
      neg_with_x += contains(s, s.target.item - 2);
    }
  }
  CHECK(static_cast<double>(pos) / c.size() == doctest::Approx(0.5).epsilon(0.04));
  CHECK(static_cast<double>(neg_with_x) / neg == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("synth: label is a function of x and y together, not of either alone") {
  const auto c = generate_synthetic(big_spec(SynthTask::compositional, 4));
  // counts[x][y][label]
  std::size_t counts[2][2][2] = {};
  for (const Sample& s : c) {
    const std::uint32_t z = s.target.item;
    ++counts[contains(s, z - 2)][contains(s, z - 1)][s.label];
  }
  CHECK(counts[1][1][0] == 0);
  CHECK(counts[0][0][1] == 0);
  CHECK(counts[1][0][1] == 0);
  CHECK(counts[0][1][1] == 0);
  CHECK(counts[1][1][1] > 0);
  // Neither single indicator decides: with x present (or y present) both labels occur.
  CHECK((counts[1][0][0] > 0 && counts[1][1][1] > 0));
  CHECK((counts[0][1][0] > 0 && counts[1][1][1] > 0));
}

TEST_CASE("synth: pairwise positives hold the partner, negatives do not") {
  auto spec = big_spec(SynthTask::pairwise, 5);
  spec.num_samples = 2000;
  for (const Sample& s : generate_synthetic(spec)) {
    CHECK(s.sequence.events.size() == 30);
    CHECK(contains(s, s.target.item - 2) == (s.label == 1));
  }
}

TEST_CASE("synth: shape of generated samples") {
  SynthSpec spec;
  spec.num_samples = 200;
  spec.noise_ratio = 0.5;
  for (const Sample& s : generate_synthetic(spec)) {
    CHECK(s.sequence.events.size() == 2 + 14);
    const ItemIds& t = s.target;
    CHECK(t.item < 150);
    CHECK(t.cate == t.item % 16);
    CHECK(t.shop == t.item % 32);
    CHECK(t.brand == t.item % 64);
    for (std::size_t j = 1; j < s.sequence.events.size(); ++j)
      CHECK(s.sequence.events[j - 1].ts <= s.sequence.events[j].ts);
    CHECK(s.sequence.events.back().ts <= s.sequence.rank_ts);
  }
}

TEST_CASE("synth: determinism and seed sensitivity") {
  SynthSpec spec;
  spec.num_samples = 500;
  const std::string a = format_corpus(generate_synthetic(spec));
  CHECK(a == format_corpus(generate_synthetic(spec)));
  spec.seed = 2;
  CHECK(a != format_corpus(generate_synthetic(spec)));
}

TEST_CASE("synth: invalid generator settings") {
  SynthSpec spec;
  spec.groups = 400;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.groups = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SynthSpec{};
  spec.noise_ratio = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SynthSpec{};
  spec.seq_len = 1;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK(parse_synth_task("pairwise") == SynthTask::pairwise);
  CHECK_THROWS_AS(parse_synth_task("triple"), ConfigError);
}

TEST_CASE("checkpoint: 32-bit bitwise round trip") {
  SamConfig cfg = testutil::tiny_config(Variant::no_mem_enhance, 7, 2, 5);
  cfg.use_ts_pos = false;
  const SamModel model = SamModel::create(cfg, 11);
  const std::string path = temp_path("model.ckpt");
  save_checkpoint(model, path);
  const SamModel back = load_checkpoint(path);
  std::filesystem::remove(path);

  CHECK(config_diff(back.config(), cfg).empty());
  REQUIRE(back.params().size() == model.params().size());
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    const Tensor& a = model.params().at(i);
    const Tensor& b = back.params()[*back.params().find(model.params().name(i))];
    REQUIRE(a.shape() == b.shape());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(static_cast<float>(a[k]) == b[k]);
  }
  // A second pass is exact in double precision.
  CHECK(encode_checkpoint(back) == encode_checkpoint(decode_checkpoint(encode_checkpoint(back))));
}

TEST_CASE("checkpoint: config text round trip and diff") {
  SamConfig a = testutil::tiny_config(Variant::full);
  CHECK(config_diff(config_from_text(config_to_text(a)), a).empty());
  SamConfig b = a;
  b.walk_iters = 4;
  b.use_ts_pos = !a.use_ts_pos;
  const auto diff = config_diff(a, b);
  CHECK(diff.size() == 2);
  CHECK(std::count(diff.begin(), diff.end(), "walk_iters (3 vs 4)") == 1);
}

TEST_CASE("checkpoint: distinct load errors") {
  const SamModel model = SamModel::create(testutil::tiny_config(Variant::full), 1);
  const std::string bytes = encode_checkpoint(model);
  auto kind_of = [](const std::string& b) {
    try {
      decode_checkpoint(b);
    } catch (const CheckpointError& e) {
      return e.kind();
    }
    FAIL("expected CheckpointError");
    return CheckpointError::Kind::io;
  };

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK(kind_of(bad) == CheckpointError::Kind::bad_magic);

  bad = bytes;
  bad[8] = 2;
  CHECK(kind_of(bad) == CheckpointError::Kind::version_mismatch);
  const std::string vmsg = error_of([&] { decode_checkpoint(bad); });
  CHECK(vmsg.find("version 2") != std::string::npos);
  CHECK(vmsg.find("version 1") != std::string::npos);

  const std::string cut = bytes.substr(0, bytes.size() - 10);
  CHECK(kind_of(cut) == CheckpointError::Kind::truncated);
  CHECK(error_of([&] { decode_checkpoint(cut); }).find("tensor '") != std::string::npos);
  CHECK(kind_of(bytes.substr(0, 5)) == CheckpointError::Kind::truncated);

  bad = bytes;
  const auto at = bad.find("att.w2");
  REQUIRE(at != std::string::npos);
  bad[at + 4] = 'q';
  CHECK(kind_of(bad) == CheckpointError::Kind::unknown_tensor);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.ckpt"), CheckpointError);
}
