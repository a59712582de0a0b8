#pragma once

#include <cstddef>

#include "sam/numkernel/params.hpp"
#include "sam/numkernel/tensor.hpp"

namespace sam {

/// Weights of one GRU cell. `T` is Tensor for standalone cells, ParamId for
/// slots inside a ParamSet, or an ops handle type while running a forward.
template <class T>
struct GruWeights {
  T w_r, w_z, w_h;  // hidden x input
  T u_r, u_z, u_h;  // hidden x hidden
  T b_r, b_z, b_h;  // hidden
};

using GruParams = GruWeights<Tensor>;
using GruSlots = GruWeights<ParamId>;

/// Resolves parameter slots to the handle type of an ops backend.
template <class Ops>
GruWeights<typename Ops::ParamRef> bind_gru(Ops& ops, const GruSlots& s) {
  return {ops.param(s.w_r), ops.param(s.w_z), ops.param(s.w_h),
          ops.param(s.u_r), ops.param(s.u_z), ops.param(s.u_h),
          ops.param(s.b_r), ops.param(s.b_z), ops.param(s.b_h)};
}

/// One GRU step, reset gate applied before the candidate's recurrent matmul:
///   r  = sigmoid(W_r x + U_r h + b_r)
///   z  = sigmoid(W_z x + U_z h + b_z)
///   h~ = tanh(W_h x + U_h (r * h) + b_h)
///   h' = (1 - z) * h + z * h~
template <class Ops, class W, class X, class H>
typename Ops::Value gru_cell(Ops& ops, const X& x, const H& h, const W& w) {
  auto r = ops.sigmoid(ops.add(ops.add(ops.matvec(w.w_r, x), ops.matvec(w.u_r, h)), w.b_r));
  auto z = ops.sigmoid(ops.add(ops.add(ops.matvec(w.w_z, x), ops.matvec(w.u_z, h)), w.b_z));
  auto candidate =
      ops.tanh(ops.add(ops.add(ops.matvec(w.w_h, x), ops.matvec(w.u_h, ops.mul(r, h))), w.b_h));
  return ops.blend(z, h, candidate);
}

/// Zero-initialised GRU weights for the given dimensions.
GruParams make_gru_params(std::size_t input_dim, std::size_t hidden_dim);

/// Throws ShapeError unless all nine tensors agree on (input_dim, hidden_dim).
void validate_gru(const GruParams& p);

/// Standalone GRU step on tensors.
Tensor gru_step(const Tensor& x, const Tensor& h, const GruParams& p);

}  // namespace sam
