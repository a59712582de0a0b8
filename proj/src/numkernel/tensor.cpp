#include "sam/numkernel/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "sam/numkernel/error.hpp"

namespace sam {

namespace alloc {

Stats& thread_stats() noexcept {
  thread_local Stats stats;
  return stats;
}

std::int64_t reset_peak() noexcept {
  auto& s = thread_stats();
  s.peak_bytes = s.live_bytes;
  return s.live_bytes;
}

}  // namespace alloc

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  const std::size_t n =
      std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  data_.assign(shape_.empty() ? 0 : n, fill);
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  Tensor t(Shape{values.size()});
  std::copy(values.begin(), values.end(), t.data_.begin());
  return t;
}

Tensor Tensor::vector(std::span<const double> values) {
  Tensor t(Shape{values.size()});
  std::copy(values.begin(), values.end(), t.data_.begin());
  return t;
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> row_major) {
  Tensor t(Shape{rows, cols});
  if (row_major.size() != 0) {
    if (row_major.size() != rows * cols)
      throw ShapeError("matrix initializer has " + std::to_string(row_major.size()) +
                       " values, expected " + std::to_string(rows * cols));
    std::copy(row_major.begin(), row_major.end(), t.data_.begin());
  }
  return t;
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace sam
