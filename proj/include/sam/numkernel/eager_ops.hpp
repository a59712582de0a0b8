#pragma once

#include <cstdint>
#include <span>

#include "sam/numkernel/kernels.hpp"
#include "sam/numkernel/params.hpp"

namespace sam {

/// Immediate-mode counterpart of Tape: the same operation vocabulary, but
/// each call returns a Tensor and nothing is recorded. Counts floating-point
/// operations for the complexity benchmark (one per add/multiply/activation).
class EagerOps {
 public:
  using Value = Tensor;
  using ParamRef = const Tensor&;

  explicit EagerOps(const ParamSet& params) : params_(&params) {}

  const Tensor& param(ParamId id) const { return (*params_)[id]; }
  Tensor lookup(ParamId table, std::size_t row) const;
  Tensor constant(std::span<const double> values) const { return Tensor::vector(values); }
  Tensor scalar(double value) const { return Tensor::vector({value}); }

  Tensor add(const Tensor& a, const Tensor& b) { return count(a.size(), kernels::add(a.data(), b.data())); }
  Tensor sub(const Tensor& a, const Tensor& b) { return count(a.size(), kernels::sub(a.data(), b.data())); }
  Tensor mul(const Tensor& a, const Tensor& b) { return count(a.size(), kernels::mul(a.data(), b.data())); }
  Tensor matvec(const Tensor& m, const Tensor& x) {
    return count(2 * m.size(), kernels::matvec(m, x.data()));
  }
  Tensor sigmoid(const Tensor& a) { return count(a.size(), kernels::sigmoid(a.data())); }
  Tensor tanh(const Tensor& a) { return count(a.size(), kernels::tanh(a.data())); }
  Tensor relu(const Tensor& a) { return count(a.size(), kernels::relu(a.data())); }
  Tensor dot(const Tensor& a, const Tensor& b) {
    return count(2 * a.size(), Tensor::vector({kernels::dot(a.data(), b.data())}));
  }
  Tensor scale(const Tensor& v, const Tensor& s);
  Tensor scale(const Tensor& v, double c) { return count(v.size(), kernels::scale(v.data(), c)); }
  Tensor blend(const Tensor& z, const Tensor& h, const Tensor& c) {
    return count(3 * z.size(), kernels::blend(z.data(), h.data(), c.data()));
  }

  template <class... Vs>
  Tensor concat(const Vs&... parts) {
    Tensor out(Shape{(parts.size() + ...)});
    std::size_t at = 0;
    ((std::copy(parts.data().begin(), parts.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(at)),
      at += parts.size()),
     ...);
    return out;
  }
  Tensor concat_all(std::span<const Tensor> parts);
  Tensor weighted_sum(std::span<const Tensor> rows, std::span<const Tensor> weights);

  std::uint64_t flops() const noexcept { return flops_; }
  void add_flops(std::uint64_t n) noexcept { flops_ += n; }

 private:
  Tensor count(std::uint64_t n, Tensor t) {
    flops_ += n;
    return t;
  }

  const ParamSet* params_;
  std::uint64_t flops_ = 0;
};

}  // namespace sam
