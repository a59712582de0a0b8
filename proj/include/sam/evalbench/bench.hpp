#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sam {

struct BenchOptions {
  /// Model names (sam, sam-nome, din, dotprod, avgpool) or "selfattn".
  std::vector<std::string> variants{"sam", "selfattn"};
  std::vector<std::size_t> seq_lens{1024, 2048, 4096, 8192, 16384};
  std::size_t dim = 16;
  std::size_t repeats = 5;
  std::size_t warmup = 1;
  std::size_t walk_iters = 3;
  std::size_t mem_steps = 3;
  std::uint64_t seed = 1;
  /// The self-attention foil is reported as OOM instead of run when its
  /// score matrix alone would exceed this many bytes.
  std::uint64_t memory_budget_bytes = std::uint64_t{1} << 30;

  void validate() const;
};

struct BenchRow {
  std::string variant;
  std::size_t seq_len = 0;
  double forward_ms_mean = 0.0;
  double forward_ms_std = 0.0;
  std::int64_t peak_bytes = 0;
  std::uint64_t flops = 0;
  bool oom = false;
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

/// Single-threaded forward-pass timing over untrained, randomly initialised
/// models on random sequences. Peak bytes count tensor payload allocated
/// during one forward pass above what was live before it.
BenchReport bench_scaling(const BenchOptions& options);

/// CSV with header `variant,L,forward_ms_mean,forward_ms_std,peak_bytes,flops`.
/// OOM rows carry "OOM" in the four measurement columns.
void write_bench_csv(std::ostream& out, const BenchReport& report);

/// Number of places where a variant's mean time drops as L grows.
std::size_t count_timing_inversions(const BenchReport& report);

}  // namespace sam
