#include "sam/evalbench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <new>
#include <ostream>

#include "sam/evalbench/csv.hpp"
#include "sam/numkernel/eager_ops.hpp"
#include "sam/numkernel/error.hpp"
#include "sam/numkernel/random.hpp"
#include "sam/samnet/samnet.hpp"

namespace sam {

namespace {

constexpr std::size_t kBenchVocab = 1000;
constexpr std::int64_t kRankTs = 1'700'000'000;

BehaviorSequence random_sequence(std::size_t len, Rng& rng) {
  BehaviorSequence seq;
  seq.rank_ts = kRankTs;
  std::int64_t ts = kRankTs - static_cast<std::int64_t>(len) * 64;
  for (std::size_t j = 0; j < len; ++j) {
    const auto item = static_cast<std::uint32_t>(rng.below(kBenchVocab));
    ts += static_cast<std::int64_t>(rng.below(64));
    seq.events.push_back({{item, item % 16, item % 32, item % 64}, ts});
  }
  return seq;
}

struct Measurement {
  double ms = 0.0;
  std::int64_t peak = 0;
  std::uint64_t flops = 0;
};

Measurement run_sam(const SamModel& model, const BehaviorSequence& seq, const ItemIds& target) {
  const auto start = std::chrono::steady_clock::now();
  alloc::PeakScope scope;
  const SamOutputs out = predict(model, seq, target);
  const std::int64_t peak = scope.peak();
  const auto stop = std::chrono::steady_clock::now();
  return {std::chrono::duration<double, std::milli>(stop - start).count(), peak, out.flops};
}

Measurement run_self_attention(const SamModel& model, const BehaviorSequence& seq) {
  const auto start = std::chrono::steady_clock::now();
  alloc::PeakScope scope;
  EagerOps ops(model.params());
  Tensor encoded;
  {
    const auto rows = encode_rows(ops, seq, model.tables(), model.config().use_ts_pos);
    encoded = Tensor(Shape{rows.size(), model.config().dim()});
    for (std::size_t j = 0; j < rows.size(); ++j)
      std::copy(rows[j].data().begin(), rows[j].data().end(), encoded.row(j).begin());
  }
  std::uint64_t flops = ops.flops();
  const Tensor out = self_attention_score(encoded, &flops);
  const std::int64_t peak = scope.peak();
  const auto stop = std::chrono::steady_clock::now();
  return {std::chrono::duration<double, std::milli>(stop - start).count(), peak, flops};
}

}  // namespace

void BenchOptions::validate() const {
  if (repeats < 5) throw ConfigError("bench needs at least 5 repeats, got " + std::to_string(repeats));
  if (variants.empty()) throw ConfigError("bench needs at least one variant");
  if (seq_lens.empty()) throw ConfigError("bench needs at least one sequence length");
  for (std::size_t len : seq_lens)
    if (len == 0) throw ConfigError("sequence lengths must be positive");
  for (const auto& v : variants)
    if (v != "selfattn") variant_from_model_name(v);
}

BenchReport bench_scaling(const BenchOptions& options) {
  options.validate();
  const std::size_t max_len = *std::max_element(options.seq_lens.begin(), options.seq_lens.end());

  BenchReport report;
  for (const auto& name : options.variants) {
    SamConfig cfg;
    cfg.embedding.dim = options.dim;
    cfg.embedding.item_vocab = kBenchVocab;
    cfg.embedding.cate_vocab = 16;
    cfg.embedding.shop_vocab = 32;
    cfg.embedding.brand_vocab = 64;
    cfg.embedding.max_len = max_len;
    cfg.attn_hidden = options.dim;
    cfg.walk_iters = options.walk_iters;
    cfg.mem_steps = options.mem_steps;
    cfg.variant = name == "selfattn" ? Variant::full : variant_from_model_name(name);
    const SamModel model = SamModel::create(cfg, options.seed);

    for (std::size_t len : options.seq_lens) {
      Rng rng(options.seed * 1'000'003 + len);
      const BehaviorSequence seq = random_sequence(len, rng);
      const auto t = static_cast<std::uint32_t>(rng.below(kBenchVocab));
      const ItemIds target{t, t % 16, t % 32, t % 64};

      BenchRow row;
      row.variant = name;
      row.seq_len = len;
      const bool foil = name == "selfattn";
      if (foil && static_cast<std::uint64_t>(len) * len * sizeof(double) > options.memory_budget_bytes) {
        row.oom = true;
        report.rows.push_back(row);
        continue;
      }
      std::vector<double> times;
      try {
        for (std::size_t r = 0; r < options.warmup + options.repeats; ++r) {
          const Measurement m = foil ? run_self_attention(model, seq) : run_sam(model, seq, target);
          row.peak_bytes = std::max(row.peak_bytes, m.peak);
          row.flops = m.flops;
          if (r >= options.warmup) times.push_back(m.ms);
        }
      } catch (const std::bad_alloc&) {
        row.oom = true;
        report.rows.push_back(row);
        continue;
      }
      double mean = 0.0;
      for (double x : times) mean += x;
      mean /= static_cast<double>(times.size());
      double var = 0.0;
      for (double x : times) var += (x - mean) * (x - mean);
      row.forward_ms_mean = mean;
      row.forward_ms_std = std::sqrt(var / static_cast<double>(times.size() - 1));
      report.rows.push_back(row);
    }
  }
  return report;
}

void write_bench_csv(std::ostream& out, const BenchReport& report) {
  out << "variant,L,forward_ms_mean,forward_ms_std,peak_bytes,flops\n";
  for (const auto& r : report.rows) {
    out << r.variant << ',' << r.seq_len << ',';
    if (r.oom)
      out << "OOM,OOM,OOM,OOM\n";
    else
      out << format_double(r.forward_ms_mean) << ',' << format_double(r.forward_ms_std) << ','
          << r.peak_bytes << ',' << r.flops << '\n';
  }
}

std::size_t count_timing_inversions(const BenchReport& report) {
  std::map<std::string, std::vector<const BenchRow*>> by_variant;
  for (const auto& r : report.rows)
    if (!r.oom) by_variant[r.variant].push_back(&r);
  std::size_t inversions = 0;
  for (auto& [name, rows] : by_variant) {
    std::sort(rows.begin(), rows.end(),
              [](const BenchRow* a, const BenchRow* b) { return a->seq_len < b->seq_len; });
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i]->forward_ms_mean < rows[i - 1]->forward_ms_mean) ++inversions;
  }
  return inversions;
}

}  // namespace sam
