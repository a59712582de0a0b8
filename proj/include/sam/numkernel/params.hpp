#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sam/numkernel/tensor.hpp"

namespace sam {

/// Strongly typed index into a ParamSet.
struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

/// Ordered collection of named learnable tensors.
class ParamSet {
 public:
  ParamId add(std::string name, Tensor value);

  std::size_t size() const noexcept { return tensors_.size(); }
  Tensor& operator[](ParamId id) { return tensors_[id.index]; }
  const Tensor& operator[](ParamId id) const { return tensors_[id.index]; }
  Tensor& at(std::size_t i) { return tensors_[i]; }
  const Tensor& at(std::size_t i) const { return tensors_[i]; }
  const std::string& name(ParamId id) const { return names_[id.index]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::optional<ParamId> find(std::string_view name) const;

  /// Total number of scalar parameters.
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

/// Per-parameter gradient accumulators, zero-initialised with the shapes of a
/// ParamSet.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParamSet& params);

  std::size_t size() const noexcept { return grads_.size(); }
  Tensor& operator[](ParamId id) { return grads_[id.index]; }
  const Tensor& operator[](ParamId id) const { return grads_[id.index]; }
  Tensor& at(std::size_t i) { return grads_[i]; }
  const Tensor& at(std::size_t i) const { return grads_[i]; }

  void zero();
  /// this += other, tensor by tensor in index order.
  void accumulate(const Gradients& other);
  void scale(double c);

 private:
  std::vector<Tensor> grads_;
};

}  // namespace sam
