#pragma once

#include <cmath>
#include <span>

#include "sam/numkernel/tensor.hpp"

// Dense kernels. All loops run in index order so results are bitwise
// reproducible for identical inputs.
namespace sam::kernels {

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// m (r x c) times v (c). Throws ShapeError naming both shapes on mismatch.
Tensor matvec(const Tensor& m, std::span<const double> v);
void matvec_into(const Tensor& m, std::span<const double> v, std::span<double> out);

Tensor add(std::span<const double> a, std::span<const double> b);
Tensor sub(std::span<const double> a, std::span<const double> b);
Tensor mul(std::span<const double> a, std::span<const double> b);
Tensor scale(std::span<const double> a, double c);
double dot(std::span<const double> a, std::span<const double> b);

Tensor sigmoid(std::span<const double> a);
Tensor tanh(std::span<const double> a);
Tensor relu(std::span<const double> a);

/// (1 - z) * h + z * c, element-wise.
Tensor blend(std::span<const double> z, std::span<const double> h, std::span<const double> c);

/// a (m x k) times b (k x n).
Tensor matmul(const Tensor& a, const Tensor& b);
/// a (m x k) times b^T where b is (n x k).
Tensor matmul_transposed(const Tensor& a, const Tensor& b);

/// In-place softmax over each row of a matrix.
void softmax_rows(Tensor& m);

}  // namespace sam::kernels
