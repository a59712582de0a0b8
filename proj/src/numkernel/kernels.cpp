#include "sam/numkernel/kernels.hpp"

#include <algorithm>

#include "sam/numkernel/error.hpp"

namespace sam::kernels {

namespace {

void require_same(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size())
    throw ShapeError(std::string(op) + ": operand widths differ: [" + std::to_string(a.size()) +
                     "] vs [" + std::to_string(b.size()) + "]");
}

template <class F>
Tensor unary(std::span<const double> a, F f) {
  Tensor out(Shape{a.size()});
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <class F>
Tensor binary(std::span<const double> a, std::span<const double> b, const char* op, F f) {
  require_same(a, b, op);
  Tensor out(Shape{a.size()});
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

void matvec_into(const Tensor& m, std::span<const double> v, std::span<double> out) {
  if (m.rank() != 2 || m.cols() != v.size() || out.size() != m.rows())
    throw ShapeError("matvec: cannot multiply " + shape_string(m.shape()) + " by [" +
                     std::to_string(v.size()) + "]");
  const std::size_t cols = m.cols();
  const double* row = m.data().data();
  for (std::size_t r = 0; r < m.rows(); ++r, row += cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
}

Tensor matvec(const Tensor& m, std::span<const double> v) {
  if (m.rank() != 2 || m.cols() != v.size())
    throw ShapeError("matvec: cannot multiply " + shape_string(m.shape()) + " by [" +
                     std::to_string(v.size()) + "]");
  Tensor out(Shape{m.rows()});
  matvec_into(m, v, out.data());
  return out;
}

Tensor add(std::span<const double> a, std::span<const double> b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(std::span<const double> a, std::span<const double> b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(std::span<const double> a, std::span<const double> b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; });
}

Tensor scale(std::span<const double> a, double c) {
  return unary(a, [c](double x) { return x * c; });
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

Tensor sigmoid(std::span<const double> a) {
  return unary(a, [](double x) { return sigmoid(x); });
}

Tensor tanh(std::span<const double> a) {
  return unary(a, [](double x) { return std::tanh(x); });
}

Tensor relu(std::span<const double> a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor blend(std::span<const double> z, std::span<const double> h, std::span<const double> c) {
  require_same(z, h, "blend");
  require_same(z, c, "blend");
  Tensor out(Shape{z.size()});
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
    throw ShapeError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                     shape_string(b.shape()));
  Tensor out(Shape{a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw ShapeError("matmul_transposed: cannot multiply " + shape_string(a.shape()) +
                     " by transpose of " + shape_string(b.shape()));
  Tensor out(Shape{a.rows(), b.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out.at(i, j) = dot(a.row(i), b.row(j));
  return out;
}

void softmax_rows(Tensor& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double top = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& x : row) {
      x = std::exp(x - top);
      total += x;
    }
    for (double& x : row) x /= total;
  }
}

}  // namespace sam::kernels
