#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sam/encoder/encoder.hpp"
#include "sam/numkernel/gru.hpp"
#include "sam/numkernel/params.hpp"
#include "sam/numkernel/tensor.hpp"

namespace sam {

/// Model variants: the full network and the ablations it is compared against.
enum class Variant {
  full,               // dual-query attention, N walk iterations, t enhancement steps
  no_mem_enhance,     // full without memory enhancement (t forced to 0)
  no_iterative_walk,  // target-only attention, one pooling pass, no memory GRU
  dot_product,        // no_iterative_walk with scaled dot-product scores
  avg_pool,           // uniform 1/L pooling, no attention
};

std::string_view to_string(Variant v);
/// Accepts the enum names above.
Variant parse_variant(std::string_view name);

/// Command-line model names: sam, sam-nome, din, dotprod, avgpool.
Variant variant_from_model_name(std::string_view name);
std::string_view model_name(Variant v);

struct SamConfig {
  EmbeddingConfig embedding;
  std::size_t attn_hidden = 16;  // d_h
  std::size_t walk_iters = 3;    // N
  std::size_t mem_steps = 3;     // t
  std::vector<std::size_t> mlp_hidden{64, 32};
  Variant variant = Variant::full;
  bool use_ts_pos = true;
  std::size_t extra_dim = 0;

  void validate() const;

  std::size_t dim() const noexcept { return embedding.dim; }
  /// Whether the memory vector is re-queried and updated by the walk GRU.
  bool walks() const noexcept {
    return variant == Variant::full || variant == Variant::no_mem_enhance;
  }
  /// Pooling passes per forward: N when walking, otherwise 1.
  std::size_t pooling_passes() const noexcept { return walks() ? walk_iters : 1; }
  std::size_t effective_mem_steps() const noexcept {
    return variant == Variant::no_mem_enhance ? 0 : mem_steps;
  }
  /// GRU steps per forward for a non-empty sequence.
  std::size_t sequential_ops() const noexcept {
    return (walks() ? walk_iters : 0) + effective_mem_steps();
  }
};

template <class T>
struct AttentionWeights {
  T w1;  // d_h x 4 d_i
  T b1;  // d_h
  T w2;  // d_h
  T b2;  // 1
};

using AttentionParams = AttentionWeights<Tensor>;
using AttentionSlots = AttentionWeights<ParamId>;

template <class Ops>
AttentionWeights<typename Ops::ParamRef> bind_attention(Ops& ops, const AttentionSlots& s) {
  return {ops.param(s.w1), ops.param(s.b1), ops.param(s.w2), ops.param(s.b2)};
}

struct DenseSlots {
  ParamId w, b;
};

struct SamSlots {
  EmbeddingSlots emb;
  AttentionSlots att;
  GruSlots walk_gru;
  ParamId mem_wu;
  GruSlots mem_gru;
  std::vector<DenseSlots> mlp;
  DenseSlots out;
};

/// A configuration together with its learnable tensors.
class SamModel {
 public:
  /// Fresh parameters: embeddings uniform in [-0.05, 0.05], matrices
  /// Glorot-uniform, biases zero.
  static SamModel create(const SamConfig& config, std::uint64_t seed);

  /// Adopts loaded tensors. Every expected name must be present with the
  /// expected shape; extra names are rejected.
  static SamModel from_params(const SamConfig& config, const ParamSet& loaded);

  const SamConfig& config() const noexcept { return config_; }
  const ParamSet& params() const noexcept { return params_; }
  ParamSet& params() noexcept { return params_; }
  const SamSlots& slots() const noexcept { return slots_; }
  EmbeddingTables tables() const { return {config_.embedding, slots_.emb}; }

 private:
  SamConfig config_;
  ParamSet params_;
  SamSlots slots_;
};

struct SamOutputs {
  double probability = 0.0;
  /// One weight vector of length L per pooling pass.
  std::vector<std::vector<double>> attention;
  std::size_t sequential_op_count = 0;
  std::uint64_t flops = 0;
};

/// [e - m || e - v || e * m || e * v].
Tensor dual_query_features(const Tensor& e, const Tensor& v, const Tensor& m);

/// sigmoid(w2 . sigmoid(w1 alpha + b1) + b2).
double attention_score(const Tensor& alpha, const AttentionParams& p);

/// sum_j weights[j] * encoded.row(j), without normalisation.
Tensor pooled_interest(const Tensor& encoded, std::span<const double> weights);

struct MemoryWalk {
  Tensor memory;                               // m_N
  std::vector<std::vector<double>> weights;    // a^(n), n = 1..N
  std::size_t gru_steps = 0;
};

/// m_0 = v; for each of N passes: score every row against (v, m), pool,
/// and update the memory with one GRU step. An empty sequence returns v
/// without any GRU step.
MemoryWalk iterative_memory_update(const Tensor& encoded, const Tensor& v, std::size_t iterations,
                                   const AttentionParams& attention, const GruParams& gru);

/// t GRU steps with input [W_u u || v] starting from u = m_N.
Tensor memory_enhance(const Tensor& memory, const Tensor& v, std::size_t steps, const Tensor& wu,
                      const GruParams& gru);

/// Full forward pass for one sample.
SamOutputs predict(const SamModel& model, const BehaviorSequence& seq, const ItemIds& target,
                   std::span<const double> extra = {});

/// softmax(E E^T / sqrt(d)) E with the L x L score matrix materialised.
/// Never trained; exists to contrast quadratic cost in the benchmark.
Tensor self_attention_score(const Tensor& encoded, std::uint64_t* flops = nullptr);

}  // namespace sam
