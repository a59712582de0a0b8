#include "sam/numkernel/gru.hpp"

#include "sam/numkernel/eager_ops.hpp"
#include "sam/numkernel/error.hpp"

namespace sam {

GruParams make_gru_params(std::size_t input_dim, std::size_t hidden_dim) {
  const Shape wx{hidden_dim, input_dim}, wh{hidden_dim, hidden_dim}, b{hidden_dim};
  return {Tensor(wx), Tensor(wx), Tensor(wx), Tensor(wh), Tensor(wh),
          Tensor(wh), Tensor(b),  Tensor(b),  Tensor(b)};
}

void validate_gru(const GruParams& p) {
  const std::size_t hidden = p.b_r.size();
  const std::size_t input = p.w_r.cols();
  auto check = [&](const Tensor& t, Shape want, const char* name) {
    if (t.shape() != want)
      throw ShapeError(std::string("gru: ") + name + " has shape " + shape_string(t.shape()) +
                       ", expected " + shape_string(want));
  };
  check(p.w_r, {hidden, input}, "w_r");
  check(p.w_z, {hidden, input}, "w_z");
  check(p.w_h, {hidden, input}, "w_h");
  check(p.u_r, {hidden, hidden}, "u_r");
  check(p.u_z, {hidden, hidden}, "u_z");
  check(p.u_h, {hidden, hidden}, "u_h");
  check(p.b_r, {hidden}, "b_r");
  check(p.b_z, {hidden}, "b_z");
  check(p.b_h, {hidden}, "b_h");
}

Tensor gru_step(const Tensor& x, const Tensor& h, const GruParams& p) {
  validate_gru(p);
  if (x.rank() != 1 || x.size() != p.w_r.cols())
    throw ShapeError("gru_step: input " + shape_string(x.shape()) + " does not match w_r " +
                     shape_string(p.w_r.shape()));
  if (h.rank() != 1 || h.size() != p.b_r.size())
    throw ShapeError("gru_step: state " + shape_string(h.shape()) + " does not match hidden size " +
                     std::to_string(p.b_r.size()));
  ParamSet none;
  EagerOps ops(none);
  return gru_cell(ops, x, h, p);
}

}  // namespace sam
