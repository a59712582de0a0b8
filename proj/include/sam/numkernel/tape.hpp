#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sam/numkernel/params.hpp"

namespace sam {

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

/// Reverse-mode record of a forward pass over a fixed vocabulary of vector
/// primitives. Values live in one contiguous arena; parameter leaves and
/// embedding-row lookups reference the ParamSet directly without copying.
///
/// A tape is single-owner and single-threaded. The referenced ParamSet must
/// stay alive and unmodified until the tape is cleared or destroyed.
class Tape {
 public:
  using Value = Var;
  using ParamRef = Var;

  enum class Op : std::uint8_t {
    Param,
    Lookup,
    Const,
    Add,
    Sub,
    Mul,
    MatVec,
    Sigmoid,
    Tanh,
    Relu,
    Dot,
    Scale,
    ScaleConst,
    Blend,
    Concat,
    WeightedSum,
    Bce,
  };

  explicit Tape(const ParamSet& params);

  /// Leaf for a whole parameter tensor; repeated calls return the same node.
  Var param(ParamId id);
  /// Leaf for one row of a matrix parameter (embedding lookup).
  Var lookup(ParamId table, std::size_t row);
  Var constant(std::span<const double> values);
  Var scalar(double value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var matvec(Var m, Var x);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var dot(Var a, Var b);
  /// Vector times a width-1 value.
  Var scale(Var v, Var s);
  Var scale(Var v, double c);
  /// (1 - z) * h + z * c.
  Var blend(Var z, Var h, Var c);

  template <class... Vs>
  Var concat(const Vs&... parts) {
    const Var list[] = {parts...};
    return concat_all(list);
  }
  Var concat_all(std::span<const Var> parts);
  /// sum_j weights[j] * rows[j]; each weight has width 1.
  Var weighted_sum(std::span<const Var> rows, std::span<const Var> weights);
  /// Binary cross-entropy of a probability against a {0,1} label, with the
  /// probability clamped to [1e-12, 1 - 1e-12].
  Var bce(Var prob, int label);

  std::span<const double> value(Var v) const;
  std::size_t width(Var v) const { return nodes_[v.id].rows * nodes_[v.id].cols; }
  Op op(Var v) const { return nodes_[v.id].op; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const ParamSet& params() const noexcept { return *params_; }

  /// Adds d(loss)/d(theta) into `grads` for every parameter touched. Nodes
  /// are visited in exact reverse creation order; their ids are appended to
  /// `visit_order` when it is non-null.
  void backward(Var loss, Gradients& grads, std::vector<std::uint32_t>* visit_order = nullptr) const;

  void clear();

 private:
  struct Node {
    Op op = Op::Const;
    std::uint32_t a = 0, b = 0, c = 0;
    std::uint32_t rows = 0, cols = 1;
    std::uint32_t list_begin = 0, list_size = 0;
    std::size_t offset = 0;
    std::size_t adj_offset = 0;
    const double* external = nullptr;
    std::size_t param = 0;
    std::size_t row = 0;
    double k = 0.0;
  };

  Var push(Node node);
  std::span<double> own(Var v);
  void require_width(Var v, std::size_t n, const char* op) const;
  void require_same(Var a, Var b, const char* op) const;

  const ParamSet* params_;
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<std::uint32_t> operands_;
  std::vector<std::int64_t> param_nodes_;
  std::size_t adj_size_ = 0;
};

}  // namespace sam
