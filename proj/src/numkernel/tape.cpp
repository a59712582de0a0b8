#include "sam/numkernel/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sam/numkernel/error.hpp"
#include "sam/numkernel/kernels.hpp"

namespace sam {

namespace {

constexpr double kProbClamp = 1e-12;

std::string width_str(std::size_t n) { return "[" + std::to_string(n) + "]"; }

}  // namespace

Tape::Tape(const ParamSet& params) : params_(&params), param_nodes_(params.size(), -1) {}

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  operands_.clear();
  std::fill(param_nodes_.begin(), param_nodes_.end(), -1);
  adj_size_ = 0;
}

Var Tape::push(Node node) {
  const std::size_t n = std::size_t{node.rows} * node.cols;
  if (node.external == nullptr) {
    node.offset = values_.size();
    values_.resize(values_.size() + n);
  }
  node.adj_offset = adj_size_;
  adj_size_ += n;
  nodes_.push_back(node);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::span<const double> Tape::value(Var v) const {
  const Node& n = nodes_[v.id];
  const std::size_t size = std::size_t{n.rows} * n.cols;
  if (n.external) return {n.external, size};
  return {values_.data() + n.offset, size};
}

std::span<double> Tape::own(Var v) {
  const Node& n = nodes_[v.id];
  return {values_.data() + n.offset, std::size_t{n.rows} * n.cols};
}

void Tape::require_width(Var v, std::size_t n, const char* op) const {
  if (width(v) != n || nodes_[v.id].cols != 1)
    throw ShapeError(std::string(op) + ": expected width " + width_str(n) + ", got [" +
                     std::to_string(nodes_[v.id].rows) + "x" + std::to_string(nodes_[v.id].cols) +
                     "]");
}

void Tape::require_same(Var a, Var b, const char* op) const {
  if (width(a) != width(b) || nodes_[a.id].cols != 1 || nodes_[b.id].cols != 1)
    throw ShapeError(std::string(op) + ": operand widths differ: " + width_str(width(a)) +
                     " vs " + width_str(width(b)));
}

Var Tape::param(ParamId id) {
  if (id.index >= param_nodes_.size()) throw ShapeError("unknown parameter index");
  if (param_nodes_[id.index] >= 0) return Var{static_cast<std::uint32_t>(param_nodes_[id.index])};
  const Tensor& t = (*params_)[id];
  Node n;
  n.op = Op::Param;
  n.rows = static_cast<std::uint32_t>(t.rank() == 0 ? 0 : t.rows());
  n.cols = static_cast<std::uint32_t>(t.cols());
  n.external = t.data().data();
  n.param = id.index;
  const Var v = push(n);
  param_nodes_[id.index] = v.id;
  return v;
}

Var Tape::lookup(ParamId table, std::size_t row) {
  const Tensor& t = (*params_)[table];
  if (t.rank() != 2) throw ShapeError("lookup: parameter is not a matrix");
  if (row >= t.rows())
    throw ShapeError("lookup: row " + std::to_string(row) + " out of range for " +
                     shape_string(t.shape()));
  Node n;
  n.op = Op::Lookup;
  n.rows = static_cast<std::uint32_t>(t.cols());
  n.external = t.row(row).data();
  n.param = table.index;
  n.row = row;
  return push(n);
}

Var Tape::constant(std::span<const double> values) {
  Node n;
  n.op = Op::Const;
  n.rows = static_cast<std::uint32_t>(values.size());
  const Var v = push(n);
  std::copy(values.begin(), values.end(), own(v).begin());
  return v;
}

Var Tape::scalar(double value) { return constant(std::span<const double>(&value, 1)); }

Var Tape::add(Var a, Var b) {
  require_same(a, b, "add");
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.rows = static_cast<std::uint32_t>(width(a));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(a), y = value(b);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  return v;
}

Var Tape::sub(Var a, Var b) {
  require_same(a, b, "sub");
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.rows = static_cast<std::uint32_t>(width(a));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(a), y = value(b);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  return v;
}

Var Tape::mul(Var a, Var b) {
  require_same(a, b, "mul");
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.rows = static_cast<std::uint32_t>(width(a));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(a), y = value(b);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  return v;
}

Var Tape::matvec(Var m, Var x) {
  const Node& mn = nodes_[m.id];
  if (nodes_[x.id].cols != 1 || mn.cols != width(x))
    throw ShapeError("matvec: cannot multiply [" + std::to_string(mn.rows) + "x" +
                     std::to_string(mn.cols) + "] by " + width_str(width(x)));
  Node n;
  n.op = Op::MatVec;
  n.a = m.id;
  n.b = x.id;
  n.rows = mn.rows;
  const std::size_t cols = mn.cols;
  const Var v = push(n);
  auto o = own(v);
  auto w = value(m);
  auto in = value(x);
  for (std::size_t r = 0; r < o.size(); ++r) {
    const double* row = w.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * in[c];
    o[r] = acc;
  }
  return v;
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = a.id;
  n.rows = static_cast<std::uint32_t>(width(a));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(a);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = kernels::sigmoid(x[i]);
  return v;
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.a = a.id;
  n.rows = static_cast<std::uint32_t>(width(a));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(a);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(x[i]);
  return v;
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::Relu;
  n.a = a.id;
  n.rows = static_cast<std::uint32_t>(width(a));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(a);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
  return v;
}

Var Tape::dot(Var a, Var b) {
  require_same(a, b, "dot");
  Node n;
  n.op = Op::Dot;
  n.a = a.id;
  n.b = b.id;
  n.rows = 1;
  const Var v = push(n);
  auto x = value(a), y = value(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  own(v)[0] = acc;
  return v;
}

Var Tape::scale(Var vec, Var s) {
  require_width(s, 1, "scale");
  Node n;
  n.op = Op::Scale;
  n.a = vec.id;
  n.b = s.id;
  n.rows = static_cast<std::uint32_t>(width(vec));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(vec);
  const double c = value(s)[0];
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * c;
  return v;
}

Var Tape::scale(Var vec, double c) {
  Node n;
  n.op = Op::ScaleConst;
  n.a = vec.id;
  n.k = c;
  n.rows = static_cast<std::uint32_t>(width(vec));
  const Var v = push(n);
  auto o = own(v);
  auto x = value(vec);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * c;
  return v;
}

Var Tape::blend(Var z, Var h, Var c) {
  require_same(z, h, "blend");
  require_same(z, c, "blend");
  Node n;
  n.op = Op::Blend;
  n.a = z.id;
  n.b = h.id;
  n.c = c.id;
  n.rows = static_cast<std::uint32_t>(width(z));
  const Var v = push(n);
  auto o = own(v);
  auto zz = value(z), hh = value(h), cc = value(c);
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = (1.0 - zz[i]) * hh[i] + zz[i] * cc[i];
  return v;
}

Var Tape::concat_all(std::span<const Var> parts) {
  Node n;
  n.op = Op::Concat;
  n.list_begin = static_cast<std::uint32_t>(operands_.size());
  n.list_size = static_cast<std::uint32_t>(parts.size());
  std::size_t total = 0;
  for (Var p : parts) {
    if (nodes_[p.id].cols != 1) throw ShapeError("concat: operands must be vectors");
    operands_.push_back(p.id);
    total += width(p);
  }
  n.rows = static_cast<std::uint32_t>(total);
  const Var v = push(n);
  auto o = own(v);
  std::size_t at = 0;
  for (Var p : parts) {
    auto x = value(p);
    std::copy(x.begin(), x.end(), o.begin() + static_cast<std::ptrdiff_t>(at));
    at += x.size();
  }
  return v;
}

Var Tape::weighted_sum(std::span<const Var> rows, std::span<const Var> weights) {
  if (rows.size() != weights.size())
    throw ShapeError("weighted_sum: " + std::to_string(rows.size()) + " rows but " +
                     std::to_string(weights.size()) + " weights");
  if (rows.empty()) throw ShapeError("weighted_sum: empty row list");
  const std::size_t d = width(rows[0]);
  Node n;
  n.op = Op::WeightedSum;
  n.list_begin = static_cast<std::uint32_t>(operands_.size());
  n.list_size = static_cast<std::uint32_t>(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    require_width(rows[j], d, "weighted_sum");
    require_width(weights[j], 1, "weighted_sum");
    operands_.push_back(rows[j].id);
    operands_.push_back(weights[j].id);
  }
  n.rows = static_cast<std::uint32_t>(d);
  const Var v = push(n);
  auto o = own(v);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    auto r = value(rows[j]);
    const double w = value(weights[j])[0];
    for (std::size_t i = 0; i < d; ++i) o[i] += w * r[i];
  }
  return v;
}

Var Tape::bce(Var prob, int label) {
  require_width(prob, 1, "bce");
  if (label != 0 && label != 1) throw DataError("bce: label must be 0 or 1");
  Node n;
  n.op = Op::Bce;
  n.a = prob.id;
  n.k = label;
  n.rows = 1;
  const Var v = push(n);
  const double p = std::clamp(value(prob)[0], kProbClamp, 1.0 - kProbClamp);
  own(v)[0] = label == 1 ? -std::log(p) : -std::log(1.0 - p);
  return v;
}

void Tape::backward(Var loss, Gradients& grads, std::vector<std::uint32_t>* visit_order) const {
  if (nodes_.empty()) throw Error("backward: tape is empty");
  if (width(loss) != 1)
    throw ShapeError("backward: loss must be scalar, got width " + width_str(width(loss)));
  if (grads.size() != params_->size())
    throw ShapeError("backward: gradient set does not match parameter set");

  std::vector<double> adj(adj_size_, 0.0);
  auto g_of = [&](std::uint32_t id) {
    const Node& n = nodes_[id];
    return std::span<double>(adj.data() + n.adj_offset, std::size_t{n.rows} * n.cols);
  };
  g_of(loss.id)[0] = 1.0;

  for (std::size_t idx = loss.id + 1; idx-- > 0;) {
    const auto id = static_cast<std::uint32_t>(idx);
    if (visit_order) visit_order->push_back(id);
    const Node& n = nodes_[id];
    auto g = g_of(id);
    switch (n.op) {
      case Op::Const:
        break;
      case Op::Param: {
        auto dst = grads.at(n.param).data();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }
      case Op::Lookup: {
        auto dst = grads.at(n.param).row(n.row);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }
      case Op::Add: {
        auto ga = g_of(n.a), gb = g_of(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::Sub: {
        auto ga = g_of(n.a), gb = g_of(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::Mul: {
        auto ga = g_of(n.a), gb = g_of(n.b);
        auto x = value(Var{n.a}), y = value(Var{n.b});
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * y[i];
          gb[i] += g[i] * x[i];
        }
        break;
      }
      case Op::MatVec: {
        const std::size_t cols = nodes_[n.a].cols;
        auto gm = g_of(n.a), gx = g_of(n.b);
        auto m = value(Var{n.a}), x = value(Var{n.b});
        for (std::size_t r = 0; r < g.size(); ++r) {
          const double gr = g[r];
          if (gr == 0.0) continue;
          double* gm_row = gm.data() + r * cols;
          const double* m_row = m.data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) {
            gm_row[c] += gr * x[c];
            gx[c] += gr * m_row[c];
          }
        }
        break;
      }
      case Op::Sigmoid: {
        auto ga = g_of(n.a);
        auto y = value(Var{id});
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::Tanh: {
        auto ga = g_of(n.a);
        auto y = value(Var{id});
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::Relu: {
        auto ga = g_of(n.a);
        auto x = value(Var{n.a});
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x[i] > 0.0) ga[i] += g[i];
        break;
      }
      case Op::Dot: {
        auto ga = g_of(n.a), gb = g_of(n.b);
        auto x = value(Var{n.a}), y = value(Var{n.b});
        for (std::size_t i = 0; i < x.size(); ++i) {
          ga[i] += g[0] * y[i];
          gb[i] += g[0] * x[i];
        }
        break;
      }
      case Op::Scale: {
        auto ga = g_of(n.a), gs = g_of(n.b);
        auto x = value(Var{n.a});
        const double s = value(Var{n.b})[0];
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * s;
          acc += g[i] * x[i];
        }
        gs[0] += acc;
        break;
      }
      case Op::ScaleConst: {
        auto ga = g_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.k;
        break;
      }
      case Op::Blend: {
        auto gz = g_of(n.a), gh = g_of(n.b), gc = g_of(n.c);
        auto z = value(Var{n.a}), h = value(Var{n.b}), c = value(Var{n.c});
        for (std::size_t i = 0; i < g.size(); ++i) {
          gz[i] += g[i] * (c[i] - h[i]);
          gh[i] += g[i] * (1.0 - z[i]);
          gc[i] += g[i] * z[i];
        }
        break;
      }
      case Op::Concat: {
        std::size_t at = 0;
        for (std::uint32_t k = 0; k < n.list_size; ++k) {
          auto gp = g_of(operands_[n.list_begin + k]);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[at + i];
          at += gp.size();
        }
        break;
      }
      case Op::WeightedSum: {
        for (std::uint32_t k = 0; k < n.list_size; ++k) {
          const std::uint32_t row_id = operands_[n.list_begin + 2 * k];
          const std::uint32_t w_id = operands_[n.list_begin + 2 * k + 1];
          auto gr = g_of(row_id);
          auto r = value(Var{row_id});
          const double w = value(Var{w_id})[0];
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) {
            gr[i] += w * g[i];
            acc += g[i] * r[i];
          }
          g_of(w_id)[0] += acc;
        }
        break;
      }
      case Op::Bce: {
        const double p = value(Var{n.a})[0];
        if (p > kProbClamp && p < 1.0 - kProbClamp) {
          const double d = n.k == 1.0 ? -1.0 / p : 1.0 / (1.0 - p);
          g_of(n.a)[0] += g[0] * d;
        }
        break;
      }
    }
  }
}

}  // namespace sam
