#include "sam/samnet/samnet.hpp"

#include <cmath>

#include "sam/numkernel/eager_ops.hpp"
#include "sam/numkernel/error.hpp"
#include "sam/numkernel/kernels.hpp"
#include "sam/samnet/forward.hpp"

namespace sam {

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(Shape{rows, cols});
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

Tensor glorot_vector(std::size_t n, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(n + 1));
  Tensor t(Shape{n});
  for (double& x : t.data()) x = rng.uniform(-limit, limit);
  return t;
}

GruSlots add_gru(ParamSet& params, const std::string& prefix, std::size_t input, std::size_t hidden,
                 Rng& rng) {
  GruSlots s;
  s.w_r = params.add(prefix + ".w_r", glorot(hidden, input, rng));
  s.w_z = params.add(prefix + ".w_z", glorot(hidden, input, rng));
  s.w_h = params.add(prefix + ".w_h", glorot(hidden, input, rng));
  s.u_r = params.add(prefix + ".u_r", glorot(hidden, hidden, rng));
  s.u_z = params.add(prefix + ".u_z", glorot(hidden, hidden, rng));
  s.u_h = params.add(prefix + ".u_h", glorot(hidden, hidden, rng));
  s.b_r = params.add(prefix + ".b_r", Tensor(Shape{hidden}));
  s.b_z = params.add(prefix + ".b_z", Tensor(Shape{hidden}));
  s.b_h = params.add(prefix + ".b_h", Tensor(Shape{hidden}));
  return s;
}

SamSlots build_layout(const SamConfig& cfg, ParamSet& params, Rng& rng) {
  SamSlots s;
  const std::size_t d = cfg.dim();
  s.emb = register_embeddings(params, cfg.embedding, rng).slots;
  s.att.w1 = params.add("att.w1", glorot(cfg.attn_hidden, 4 * d, rng));
  s.att.b1 = params.add("att.b1", Tensor(Shape{cfg.attn_hidden}));
  s.att.w2 = params.add("att.w2", glorot_vector(cfg.attn_hidden, rng));
  s.att.b2 = params.add("att.b2", Tensor(Shape{1}));
  s.walk_gru = add_gru(params, "walk.gru", d, d, rng);
  s.mem_wu = params.add("mem.wu", glorot(d, d, rng));
  s.mem_gru = add_gru(params, "mem.gru", 2 * d, d, rng);
  std::size_t in = 2 * d + cfg.extra_dim;
  for (std::size_t k = 0; k < cfg.mlp_hidden.size(); ++k) {
    const std::string prefix = "mlp." + std::to_string(k);
    DenseSlots layer;
    layer.w = params.add(prefix + ".w", glorot(cfg.mlp_hidden[k], in, rng));
    layer.b = params.add(prefix + ".b", Tensor(Shape{cfg.mlp_hidden[k]}));
    s.mlp.push_back(layer);
    in = cfg.mlp_hidden[k];
  }
  s.out.w = params.add("mlp.out.w", glorot(1, in, rng));
  s.out.b = params.add("mlp.out.b", Tensor(Shape{1}));
  return s;
}

AttentionWeights<const Tensor&> bind(const AttentionParams& p) { return {p.w1, p.b1, p.w2, p.b2}; }

void validate_attention(const AttentionParams& p, std::size_t alpha_width) {
  const std::size_t dh = p.b1.size();
  if (p.w1.shape() != Shape{dh, alpha_width} || p.w2.shape() != Shape{dh} ||
      p.b1.shape() != Shape{dh} || p.b2.shape() != Shape{1})
    throw ShapeError("attention params inconsistent: w1 " + shape_string(p.w1.shape()) + ", b1 " +
                     shape_string(p.b1.shape()) + ", w2 " + shape_string(p.w2.shape()) + ", b2 " +
                     shape_string(p.b2.shape()) + " for feature width " +
                     std::to_string(alpha_width));
}

std::vector<Tensor> split_rows(const Tensor& encoded) {
  std::vector<Tensor> rows;
  rows.reserve(encoded.rows());
  for (std::size_t j = 0; j < encoded.rows(); ++j) rows.push_back(Tensor::vector(encoded.row(j)));
  return rows;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_mem_enhance: return "no_mem_enhance";
    case Variant::no_iterative_walk: return "no_iterative_walk";
    case Variant::dot_product: return "dot_product";
    case Variant::avg_pool: return "avg_pool";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::full, Variant::no_mem_enhance, Variant::no_iterative_walk,
                    Variant::dot_product, Variant::avg_pool})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

Variant variant_from_model_name(std::string_view name) {
  if (name == "sam") return Variant::full;
  if (name == "sam-nome") return Variant::no_mem_enhance;
  if (name == "din") return Variant::no_iterative_walk;
  if (name == "dotprod") return Variant::dot_product;
  if (name == "avgpool") return Variant::avg_pool;
  throw ConfigError("unknown model '" + std::string(name) +
                    "' (expected sam, sam-nome, din, dotprod or avgpool)");
}

std::string_view model_name(Variant v) {
  switch (v) {
    case Variant::full: return "sam";
    case Variant::no_mem_enhance: return "sam-nome";
    case Variant::no_iterative_walk: return "din";
    case Variant::dot_product: return "dotprod";
    case Variant::avg_pool: return "avgpool";
  }
  return "?";
}

void SamConfig::validate() const {
  embedding.validate();
  if (attn_hidden == 0) throw ConfigError("attention hidden size must be positive");
  if (walk_iters == 0) throw ConfigError("walk iterations N must be at least 1");
  for (std::size_t h : mlp_hidden)
    if (h == 0) throw ConfigError("MLP layer sizes must be positive");
}

SamModel SamModel::create(const SamConfig& config, std::uint64_t seed) {
  config.validate();
  SamModel m;
  m.config_ = config;
  Rng rng(seed);
  m.slots_ = build_layout(config, m.params_, rng);
  return m;
}

SamModel SamModel::from_params(const SamConfig& config, const ParamSet& loaded) {
  SamModel m = create(config, 0);
  for (std::size_t i = 0; i < loaded.size(); ++i)
    if (!m.params_.find(loaded.name(i)))
      throw DataError("unknown tensor '" + loaded.name(i) + "' for this model configuration");
  for (std::size_t i = 0; i < m.params_.size(); ++i) {
    const auto id = loaded.find(m.params_.name(i));
    if (!id) throw DataError("missing tensor '" + m.params_.name(i) + "'");
    if (loaded[*id].shape() != m.params_.at(i).shape())
      throw DataError("tensor '" + m.params_.name(i) + "' has shape " +
                      shape_string(loaded[*id].shape()) + ", configuration expects " +
                      shape_string(m.params_.at(i).shape()));
    m.params_.at(i) = loaded[*id];
  }
  return m;
}

Tensor dual_query_features(const Tensor& e, const Tensor& v, const Tensor& m) {
  if (e.size() != v.size() || e.size() != m.size())
    throw ShapeError("dual_query_features: widths e=" + std::to_string(e.size()) +
                     " v=" + std::to_string(v.size()) + " m=" + std::to_string(m.size()));
  ParamSet none;
  EagerOps ops(none);
  return detail::dual_query(ops, e, v, m);
}

double attention_score(const Tensor& alpha, const AttentionParams& p) {
  validate_attention(p, alpha.size());
  ParamSet none;
  EagerOps ops(none);
  return detail::feed_forward_score(ops, alpha, bind(p))[0];
}

Tensor pooled_interest(const Tensor& encoded, std::span<const double> weights) {
  if (encoded.rows() != weights.size())
    throw ShapeError("pooled_interest: " + std::to_string(encoded.rows()) + " rows but " +
                     std::to_string(weights.size()) + " weights");
  Tensor out(Shape{encoded.cols()});
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const auto row = encoded.row(j);
    for (std::size_t i = 0; i < row.size(); ++i) out[i] += weights[j] * row[i];
  }
  return out;
}

MemoryWalk iterative_memory_update(const Tensor& encoded, const Tensor& v, std::size_t iterations,
                                   const AttentionParams& attention, const GruParams& gru) {
  if (iterations == 0) throw ConfigError("walk iterations N must be at least 1");
  if (encoded.rank() != 2 || encoded.cols() != v.size())
    throw ShapeError("iterative_memory_update: encoded " + shape_string(encoded.shape()) +
                     " incompatible with target width " + std::to_string(v.size()));
  validate_attention(attention, 4 * v.size());
  validate_gru(gru);
  MemoryWalk out;
  out.memory = v;
  if (encoded.rows() == 0) return out;

  ParamSet none;
  EagerOps ops(none);
  SamConfig cfg;
  cfg.embedding.dim = v.size();
  const auto rows = split_rows(encoded);
  const auto aw = bind(attention);
  for (std::size_t n = 0; n < iterations; ++n) {
    std::vector<Tensor> weights;
    Tensor pooled = detail::pool_pass(ops, cfg, aw, rows, v, out.memory, weights);
    out.memory = gru_cell(ops, pooled, out.memory, gru);
    ++out.gru_steps;
    std::vector<double> w;
    w.reserve(weights.size());
    for (const auto& t : weights) w.push_back(t[0]);
    out.weights.push_back(std::move(w));
  }
  return out;
}

Tensor memory_enhance(const Tensor& memory, const Tensor& v, std::size_t steps, const Tensor& wu,
                      const GruParams& gru) {
  const std::size_t d = memory.size();
  if (v.size() != d || wu.shape() != Shape{d, d})
    throw ShapeError("memory_enhance: memory [" + std::to_string(d) + "], target [" +
                     std::to_string(v.size()) + "], W_u " + shape_string(wu.shape()));
  validate_gru(gru);
  if (gru.w_r.cols() != 2 * d || gru.b_r.size() != d)
    throw ShapeError("memory_enhance: GRU must map [" + std::to_string(2 * d) + "] -> [" +
                     std::to_string(d) + "], got w_r " + shape_string(gru.w_r.shape()));
  ParamSet none;
  EagerOps ops(none);
  Tensor u = memory;
  for (std::size_t s = 0; s < steps; ++s) u = gru_cell(ops, ops.concat(ops.matvec(wu, u), v), u, gru);
  return u;
}

SamOutputs predict(const SamModel& model, const BehaviorSequence& seq, const ItemIds& target,
                   std::span<const double> extra) {
  EagerOps ops(model.params());
  auto trace = detail::sam_forward(ops, model, seq, target, extra);
  SamOutputs out;
  out.probability = trace.prob[0];
  out.sequential_op_count = trace.gru_steps;
  out.flops = ops.flops();
  for (const auto& pass : trace.weights) {
    std::vector<double> w;
    w.reserve(pass.size());
    for (const auto& t : pass) w.push_back(t[0]);
    out.attention.push_back(std::move(w));
  }
  return out;
}

Tensor self_attention_score(const Tensor& encoded, std::uint64_t* flops) {
  if (encoded.rank() != 2 || encoded.rows() == 0)
    throw ShapeError("self_attention_score: need a non-empty L x d matrix, got " +
                     shape_string(encoded.shape()));
  const std::size_t len = encoded.rows(), d = encoded.cols();
  Tensor scores = kernels::matmul_transposed(encoded, encoded);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& x : scores.data()) x *= inv_sqrt_d;
  kernels::softmax_rows(scores);
  Tensor out = kernels::matmul(scores, encoded);
  if (flops) {
    const std::uint64_t l2 = static_cast<std::uint64_t>(len) * len;
    // two L x L x d products, the scaling, and exp/sum/divide in the softmax
    *flops += 4 * l2 * d + l2 + 3 * l2;
  }
  return out;
}

}  // namespace sam
