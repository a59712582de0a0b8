#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "sam/evalbench/bench.hpp"
#include "sam/evalbench/metrics.hpp"
#include "sam/numkernel/error.hpp"
#include "test_util.hpp"

using namespace sam;

namespace {

double brute_auc(const std::vector<ScoredLabel>& s) {
  double good = 0.0, pairs = 0.0;
  for (const auto& p : s)
    if (p.label == 1)
      for (const auto& n : s)
        if (n.label == 0) {
          pairs += 1.0;
          good += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
        }
  return good / pairs;
}

double plain_entropy(std::vector<double> a) {
  double sum = 0.0;
  for (double x : a) sum += x;
  if (sum == 0.0) return std::log(static_cast<double>(a.size()));
  double h = 0.0;
  for (double x : a)
    if (x > 0) h -= (x / sum) * std::log(x / sum);
  return h;
}

const BenchRow& row(const BenchReport& r, const std::string& v, std::size_t len) {
  for (const auto& x : r.rows)
    if (x.variant == v && x.seq_len == len) return x;
  throw std::runtime_error("missing row");
}

}  // namespace

TEST_CASE("auc examples") {
  const std::vector<ScoredLabel> perfect{{0.9, 1}, {0.1, 0}};
  CHECK(auc(perfect) == 1.0);
  const std::vector<ScoredLabel> flat{{0.3, 1}, {0.3, 0}, {0.3, 1}, {0.3, 0}};
  CHECK(auc(flat) == 0.5);
  const std::vector<ScoredLabel> mixed{{0.8, 1}, {0.4, 0}, {0.4, 1}, {0.7, 0}, {0.1, 0}, {0.9, 1}};
  // pairs: 0.8 beats 0.4,0.7,0.1 (3); 0.4 ties 0.4, beats 0.1 (1.5); 0.9 beats all (3) -> 7.5 / 9
  CHECK(auc(mixed) == doctest::Approx(7.5 / 9.0).epsilon(1e-15));
  CHECK(auc(mixed) == brute_auc(mixed));
}

TEST_CASE("auc is undefined for a single class") {
  const std::vector<ScoredLabel> pos{{0.2, 1}, {0.4, 1}};
  CHECK_THROWS_AS(auc(pos), DataError);
  CHECK_THROWS_AS(auc(std::vector<ScoredLabel>{}), DataError);
}

TEST_CASE("auc equals the pairwise definition on random tied inputs") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(999);
    const std::size_t levels = 1 + rng.below(trial % 2 == 0 ? 5 : 100000);
    std::vector<ScoredLabel> s(n);
    for (auto& x : s) {
      x.score = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
      x.label = static_cast<int>(rng.below(2));
    }
    s[0].label = 1;
    s[1].label = 0;
    CHECK(auc(s) == brute_auc(s));
  }
}

TEST_CASE("attention entropy examples") {
  const std::vector<double> uniform(8, 0.37);
  CHECK(attention_entropy(uniform) == doctest::Approx(2.079442).epsilon(1e-6));
  const std::vector<double> hot{0, 0, 0.9, 0};
  CHECK(attention_entropy(hot) == 0.0);
  const std::vector<double> a{0.2, 0.6, 0.2};
  CHECK(attention_entropy(a) == doctest::Approx(-(0.4 * std::log(0.2) + 0.6 * std::log(0.6))).epsilon(1e-14));
  const std::vector<double> zeros(5, 0.0);
  CHECK(attention_entropy(zeros) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
  const std::vector<double> neg{0.5, -0.1};
  CHECK_THROWS_AS(attention_entropy(neg), DataError);
}

TEST_CASE("attention entropy: bounds and rescaling") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> a(1 + rng.below(50));
    for (double& x : a) x = rng.below(4) == 0 ? 0.0 : rng.uniform(0.0, 1.0);
    const double h = attention_entropy(a);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(a.size())) + 1e-12);
    CHECK(h == doctest::Approx(plain_entropy(a)).epsilon(1e-12));
    const double c = rng.uniform(0.01, 100.0);
    std::vector<double> scaled = a;
    for (double& x : scaled) x *= c;
    CHECK(attention_entropy(scaled) == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("entropy trace") {
  Rng rng(9);
  std::vector<Sample> samples(20);
  for (auto& s : samples) {
    s.target = testutil::ids(static_cast<std::uint32_t>(rng.below(12)));
    s.sequence = testutil::random_sequence(6, rng);
  }
  const auto one = entropy_vs_iterations(SamModel::create(testutil::tiny_config(Variant::full, 6, 1), 1), samples);
  CHECK(one.mean_entropy.size() == 1);

  SamModel flat = SamModel::create(testutil::tiny_config(Variant::full, 6, 4), 1);
  testutil::zero_all(flat.params());
  const auto trace = entropy_vs_iterations(flat, samples);
  REQUIRE(trace.mean_entropy.size() == 4);
  for (double h : trace.mean_entropy) CHECK(h == doctest::Approx(std::log(6.0)).epsilon(1e-14));

  std::ostringstream out;
  write_entropy_csv(out, trace);
  CHECK(out.str().rfind("iteration,mean_entropy\n1,", 0) == 0);
}

TEST_CASE("bench: rows, flop ratios and peak memory") {
  BenchOptions o;
  o.variants = {"sam", "din", "selfattn"};
  o.seq_lens = {1024, 2048, 4096, 16384};
  o.memory_budget_bytes = std::uint64_t{1} << 28;  // selfattn at 16384 needs 2 GiB
  const BenchReport r = bench_scaling(o);
  CHECK(r.rows.size() == 12);

  for (const char* v : {"sam", "din"}) {
    const double ratio = static_cast<double>(row(r, v, 2048).flops) / static_cast<double>(row(r, v, 1024).flops);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.025));
    const double big = static_cast<double>(row(r, v, 16384).peak_bytes);
    CHECK(big > 0);
    CHECK(big < 4.0 * static_cast<double>(row(r, v, 4096).peak_bytes));
  }
  const double sa = static_cast<double>(row(r, "selfattn", 2048).flops) /
                    static_cast<double>(row(r, "selfattn", 1024).flops);
  CHECK(sa == doctest::Approx(4.0).epsilon(0.02));
  CHECK(row(r, "selfattn", 16384).oom);
  CHECK_FALSE(row(r, "selfattn", 4096).oom);
  CHECK_FALSE(row(r, "sam", 16384).oom);
  for (const auto& x : r.rows)
    if (!x.oom) CHECK(x.forward_ms_mean > 0.0);

  std::ostringstream out;
  write_bench_csv(out, r);
  const std::string text = out.str();
  CHECK(text.rfind("variant,L,forward_ms_mean,forward_ms_std,peak_bytes,flops\n", 0) == 0);
  CHECK(text.find("selfattn,16384,OOM,OOM,OOM,OOM\n") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 13);
}

TEST_CASE("bench: option validation") {
  BenchOptions o;
  o.repeats = 4;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = BenchOptions{};
  o.variants = {"sasrec"};
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = BenchOptions{};
  o.seq_lens = {0};
  CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("bench: timing inversions are counted per variant") {
  BenchReport r;
  r.rows = {{"sam", 1, 1.0}, {"sam", 2, 2.0}, {"sam", 4, 1.5}, {"din", 1, 3.0}, {"din", 2, 3.5}};
  CHECK(count_timing_inversions(r) == 1);
  r.rows.push_back({"din", 4, 0.1});
  CHECK(count_timing_inversions(r) == 2);
}
