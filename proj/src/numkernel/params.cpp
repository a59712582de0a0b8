#include "sam/numkernel/params.hpp"

#include <algorithm>

#include "sam/numkernel/error.hpp"

namespace sam {

ParamId ParamSet::add(std::string name, Tensor value) {
  if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return ParamId{tensors_.size() - 1};
}

std::optional<ParamId> ParamSet::find(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return ParamId{static_cast<std::size_t>(it - names_.begin())};
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

Gradients::Gradients(const ParamSet& params) {
  grads_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) grads_.emplace_back(params.at(i).shape());
}

void Gradients::zero() {
  for (auto& g : grads_) std::fill(g.data().begin(), g.data().end(), 0.0);
}

void Gradients::accumulate(const Gradients& other) {
  if (other.grads_.size() != grads_.size())
    throw ShapeError("gradient sets have different parameter counts");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    auto dst = grads_[i].data();
    auto src = other.grads_[i].data();
    if (dst.size() != src.size())
      throw ShapeError("gradient shape mismatch at parameter " + std::to_string(i));
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

void Gradients::scale(double c) {
  for (auto& g : grads_)
    for (double& x : g.data()) x *= c;
}

}  // namespace sam
