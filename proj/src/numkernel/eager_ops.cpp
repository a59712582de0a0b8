#include "sam/numkernel/eager_ops.hpp"

#include <algorithm>

#include "sam/numkernel/error.hpp"

namespace sam {

Tensor EagerOps::lookup(ParamId table, std::size_t row) const {
  const Tensor& t = (*params_)[table];
  if (t.rank() != 2) throw ShapeError("lookup: parameter is not a matrix");
  if (row >= t.rows())
    throw ShapeError("lookup: row " + std::to_string(row) + " out of range for " +
                     shape_string(t.shape()));
  return Tensor::vector(t.row(row));
}

Tensor EagerOps::scale(const Tensor& v, const Tensor& s) {
  if (s.size() != 1) throw ShapeError("scale: factor must have width 1");
  return count(v.size(), kernels::scale(v.data(), s[0]));
}

Tensor EagerOps::concat_all(std::span<const Tensor> parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  Tensor out(Shape{total});
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(at));
    at += p.size();
  }
  return out;
}

Tensor EagerOps::weighted_sum(std::span<const Tensor> rows, std::span<const Tensor> weights) {
  if (rows.size() != weights.size())
    throw ShapeError("weighted_sum: " + std::to_string(rows.size()) + " rows but " +
                     std::to_string(weights.size()) + " weights");
  if (rows.empty()) throw ShapeError("weighted_sum: empty row list");
  const std::size_t d = rows[0].size();
  Tensor out(Shape{d});
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != d || weights[j].size() != 1)
      throw ShapeError("weighted_sum: inconsistent row or weight width");
    const double w = weights[j][0];
    for (std::size_t i = 0; i < d; ++i) out[i] += w * rows[j][i];
  }
  flops_ += 2 * d * rows.size();
  return out;
}

}  // namespace sam
