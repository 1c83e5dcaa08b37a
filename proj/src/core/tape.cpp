#include "cofuse/core/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cofuse::core {

namespace {

[[noreturn]] void shape_fail(OpKind kind, const std::string& what) {
  throw ShapeError(std::string(op_name(kind)) + ": " + what);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void softmax_row(const double* in, double* out, std::size_t n) {
  double m = in[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, in[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - m);
    s += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= s;
}

// Four interleaved partial sums, combined in a fixed order, so the loop
// vectorises without reassociation flags and stays deterministic.
double dot(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) acc[j] += a[i + j] * b[i + j];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Constant: return "constant";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "elemwise-mul";
    case OpKind::Div: return "div";
    case OpKind::ScalarMul: return "scalar-mul";
    case OpKind::AddScalar: return "add-scalar";
    case OpKind::Scale: return "scale";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Exp: return "exp";
    case OpKind::Neg: return "neg";
    case OpKind::Log: return "log";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Softplus: return "softplus";
    case OpKind::MeanAll: return "mean-all";
    case OpKind::SumAll: return "sum-all";
    case OpKind::MeanAxis: return "mean-axis";
    case OpKind::Concat: return "concat";
    case OpKind::Softmax: return "softmax-lastaxis";
    case OpKind::StopGrad: return "stopgrad";
    case OpKind::SelectMask: return "select-mask";
    case OpKind::Pick: return "pick";
    case OpKind::Sum: return "sum";
  }
  return "unknown";
}

const Tape::Node& Tape::node(Var v, OpKind kind_for_error) const {
  if (!v.valid() || v.id >= nodes_.size()) {
    shape_fail(kind_for_error, "input handle does not belong to this tape");
  }
  return nodes_[v.id];
}

Var Tape::push(Node n) {
  if (backward_done_) throw std::logic_error("tape: cannot record after backward without reset");
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Tensor& t) {
  Node n;
  n.kind = OpKind::Leaf;
  n.shape = t.shape;
  n.value = t.data;
  if (t.requires_grad) {
    if (t.grad.size() != t.data.size()) t.grad.assign(t.data.size(), 0.0);
    n.sink = t.grad.data();
    n.needs_grad = true;
  }
  return push(std::move(n));
}

Var Tape::leaf(const Tensor& t, std::span<double> grad_sink) {
  Node n;
  n.kind = OpKind::Leaf;
  n.shape = t.shape;
  n.value = t.data;
  if (!grad_sink.empty()) {
    if (grad_sink.size() != t.data.size()) {
      shape_fail(OpKind::Leaf, "gradient sink size " + std::to_string(grad_sink.size()) +
                                   " does not match tensor " + shape_str(t.shape));
    }
    n.sink = grad_sink.data();
    n.needs_grad = true;
  }
  return push(std::move(n));
}

Var Tape::constant(Tensor t) {
  Node n;
  n.kind = OpKind::Constant;
  n.shape = std::move(t.shape);
  n.value = std::move(t.data);
  return push(std::move(n));
}

Var Tape::constant(double v) {
  Node n;
  n.kind = OpKind::Constant;
  n.shape = {1};
  n.value = {v};
  return push(std::move(n));
}

Var Tape::constant(std::vector<double> v) {
  if (v.empty()) shape_fail(OpKind::Constant, "empty vector");
  Node n;
  n.kind = OpKind::Constant;
  n.shape = {v.size()};
  n.value = std::move(v);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Node& na = node(a, OpKind::MatMul);
  const Node& nb = node(b, OpKind::MatMul);
  if (nb.shape.size() != 2 || na.shape.empty() || na.shape.size() > 2 || na.shape.back() != nb.shape[0]) {
    shape_fail(OpKind::MatMul, "cannot multiply " + shape_str(na.shape) + " by " + shape_str(nb.shape));
  }
  const std::size_t rows = na.shape.size() == 2 ? na.shape[0] : 1;
  const std::size_t inner = nb.shape[0];
  const std::size_t cols = nb.shape[1];
  Node n;
  n.kind = OpKind::MatMul;
  n.shape = na.shape.size() == 2 ? Shape{rows, cols} : Shape{cols};
  n.value.assign(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* out = n.value.data() + r * cols;
    const double* arow = na.value.data() + r * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = nb.value.data() + k * cols;
      for (std::size_t c = 0; c < cols; ++c) out[c] += av * brow[c];
    }
  }
  n.in = {a.id, b.id};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::binary_same(OpKind kind, Var a, Var b) {
  const Node& na = node(a, kind);
  const Node& nb = node(b, kind);
  if (na.shape != nb.shape) {
    shape_fail(kind, "shape mismatch " + shape_str(na.shape) + " vs " + shape_str(nb.shape));
  }
  Node n;
  n.kind = kind;
  n.shape = na.shape;
  n.value.resize(na.value.size());
  const auto* x = na.value.data();
  const auto* y = nb.value.data();
  auto* out = n.value.data();
  const std::size_t len = n.value.size();
  switch (kind) {
    case OpKind::Add:
      for (std::size_t i = 0; i < len; ++i) out[i] = x[i] + y[i];
      break;
    case OpKind::Sub:
      for (std::size_t i = 0; i < len; ++i) out[i] = x[i] - y[i];
      break;
    case OpKind::Mul:
      for (std::size_t i = 0; i < len; ++i) out[i] = x[i] * y[i];
      break;
    case OpKind::Div:
      for (std::size_t i = 0; i < len; ++i) out[i] = x[i] / y[i];
      break;
    default:
      shape_fail(kind, "not a binary elementwise op");
  }
  n.in = {a.id, b.id};
  n.needs_grad = na.needs_grad || nb.needs_grad;
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) { return binary_same(OpKind::Add, a, b); }
Var Tape::sub(Var a, Var b) { return binary_same(OpKind::Sub, a, b); }
Var Tape::mul(Var a, Var b) { return binary_same(OpKind::Mul, a, b); }
Var Tape::div(Var a, Var b) { return binary_same(OpKind::Div, a, b); }

Var Tape::scalar_mul(Var x, double c) {
  const Node& nx = node(x, OpKind::ScalarMul);
  Node n;
  n.kind = OpKind::ScalarMul;
  n.shape = nx.shape;
  n.value.resize(nx.value.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = nx.value[i] * c;
  n.scalar = c;
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::add_scalar(Var x, double c) {
  const Node& nx = node(x, OpKind::AddScalar);
  Node n;
  n.kind = OpKind::AddScalar;
  n.shape = nx.shape;
  n.value.resize(nx.value.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = nx.value[i] + c;
  n.scalar = c;
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::scale(Var x, Var s) {
  const Node& nx = node(x, OpKind::Scale);
  const Node& ns = node(s, OpKind::Scale);
  if (ns.value.size() != 1) {
    shape_fail(OpKind::Scale, "scale factor must have one element, got " + shape_str(ns.shape));
  }
  Node n;
  n.kind = OpKind::Scale;
  n.shape = nx.shape;
  n.value.resize(nx.value.size());
  const double c = ns.value[0];
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = nx.value[i] * c;
  n.in = {x.id, s.id};
  n.needs_grad = nx.needs_grad || ns.needs_grad;
  return push(std::move(n));
}

Var Tape::unary(OpKind kind, Var x) {
  const Node& nx = node(x, kind);
  Node n;
  n.kind = kind;
  n.shape = nx.shape;
  n.value.resize(nx.value.size());
  const auto* in = nx.value.data();
  auto* out = n.value.data();
  const std::size_t len = n.value.size();
  switch (kind) {
    case OpKind::Relu:
      for (std::size_t i = 0; i < len; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case OpKind::Tanh:
      for (std::size_t i = 0; i < len; ++i) out[i] = std::tanh(in[i]);
      break;
    case OpKind::Exp:
      for (std::size_t i = 0; i < len; ++i) out[i] = std::exp(in[i]);
      break;
    case OpKind::Neg:
      for (std::size_t i = 0; i < len; ++i) out[i] = -in[i];
      break;
    case OpKind::Log:
      for (std::size_t i = 0; i < len; ++i) out[i] = std::log(in[i]);
      break;
    case OpKind::Sigmoid:
      for (std::size_t i = 0; i < len; ++i) out[i] = stable_sigmoid(in[i]);
      break;
    case OpKind::Softplus:
      for (std::size_t i = 0; i < len; ++i) out[i] = stable_softplus(in[i]);
      break;
    case OpKind::StopGrad:
      std::copy(in, in + len, out);
      break;
    case OpKind::Softmax: {
      const std::size_t cols = nx.shape.back();
      for (std::size_t r = 0; r < len / cols; ++r) softmax_row(in + r * cols, out + r * cols, cols);
      break;
    }
    default:
      shape_fail(kind, "not a unary op");
  }
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = kind != OpKind::StopGrad && nx.needs_grad;
  return push(std::move(n));
}

Var Tape::relu(Var x) { return unary(OpKind::Relu, x); }
Var Tape::tanh(Var x) { return unary(OpKind::Tanh, x); }
Var Tape::exp(Var x) { return unary(OpKind::Exp, x); }
Var Tape::neg(Var x) { return unary(OpKind::Neg, x); }
Var Tape::log(Var x) { return unary(OpKind::Log, x); }
Var Tape::sigmoid(Var x) { return unary(OpKind::Sigmoid, x); }
Var Tape::softplus(Var x) { return unary(OpKind::Softplus, x); }
Var Tape::stopgrad(Var x) { return unary(OpKind::StopGrad, x); }

Var Tape::softmax(Var x) {
  const Node& nx = node(x, OpKind::Softmax);
  if (nx.shape.empty() || nx.shape.size() > 2) {
    shape_fail(OpKind::Softmax, "expects rank 1 or 2, got " + shape_str(nx.shape));
  }
  return unary(OpKind::Softmax, x);
}

Var Tape::mean_all(Var x) {
  const Node& nx = node(x, OpKind::MeanAll);
  Node n;
  n.kind = OpKind::MeanAll;
  n.shape = {1};
  double s = 0.0;
  for (double v : nx.value) s += v;
  n.value = {s / static_cast<double>(nx.value.size())};
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::sum_all(Var x) {
  const Node& nx = node(x, OpKind::SumAll);
  Node n;
  n.kind = OpKind::SumAll;
  n.shape = {1};
  double s = 0.0;
  for (double v : nx.value) s += v;
  n.value = {s};
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::mean_axis(Var x, std::size_t axis) {
  const Node& nx = node(x, OpKind::MeanAxis);
  if (axis >= nx.shape.size() || nx.shape.size() > 2) {
    shape_fail(OpKind::MeanAxis, "axis " + std::to_string(axis) + " invalid for " + shape_str(nx.shape));
  }
  if (nx.shape.size() == 1) {
    Var m = mean_all(x);
    nodes_[m.id].kind = OpKind::MeanAxis;
    nodes_[m.id].index = 0;
    return m;
  }
  const std::size_t rows = nx.shape[0], cols = nx.shape[1];
  Node n;
  n.kind = OpKind::MeanAxis;
  n.index = axis;
  if (axis == 0) {
    n.shape = {cols};
    n.value.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) n.value[c] += nx.value[r * cols + c];
    for (auto& v : n.value) v /= static_cast<double>(rows);
  } else {
    n.shape = {rows};
    n.value.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) n.value[r] += nx.value[r * cols + c];
      n.value[r] /= static_cast<double>(cols);
    }
  }
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::concat(std::span<const Var> xs) {
  if (xs.empty()) shape_fail(OpKind::Concat, "no inputs");
  Node n;
  n.kind = OpKind::Concat;
  std::size_t total = 0;
  for (Var v : xs) {
    const Node& nv = node(v, OpKind::Concat);
    if (nv.shape.size() != 1) shape_fail(OpKind::Concat, "expects rank-1 inputs, got " + shape_str(nv.shape));
    total += nv.value.size();
  }
  n.value.reserve(total);
  for (Var v : xs) {
    const Node& nv = nodes_[v.id];
    n.value.insert(n.value.end(), nv.value.begin(), nv.value.end());
    n.list.push_back(v.id);
    n.needs_grad = n.needs_grad || nv.needs_grad;
  }
  n.shape = {total};
  return push(std::move(n));
}

Var Tape::select_mask(Var x, std::vector<double> mask) {
  const Node& nx = node(x, OpKind::SelectMask);
  if (mask.size() != nx.value.size()) {
    shape_fail(OpKind::SelectMask, "mask of length " + std::to_string(mask.size()) + " for input " +
                                       shape_str(nx.shape));
  }
  Node n;
  n.kind = OpKind::SelectMask;
  n.shape = nx.shape;
  n.value.resize(nx.value.size());
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] = nx.value[i] * mask[i];
  n.aux = std::move(mask);
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::pick(Var x, std::size_t index) {
  const Node& nx = node(x, OpKind::Pick);
  if (index >= nx.value.size()) {
    shape_fail(OpKind::Pick, "index " + std::to_string(index) + " out of range for " + shape_str(nx.shape));
  }
  Node n;
  n.kind = OpKind::Pick;
  n.shape = {1};
  n.value = {nx.value[index]};
  n.index = index;
  n.in = {x.id, Var::kInvalid};
  n.needs_grad = nx.needs_grad;
  return push(std::move(n));
}

Var Tape::sum(std::span<const Var> xs) {
  if (xs.empty()) shape_fail(OpKind::Sum, "no inputs");
  const Shape shape = node(xs[0], OpKind::Sum).shape;
  Node n;
  n.kind = OpKind::Sum;
  n.shape = shape;
  n.value.assign(numel(shape), 0.0);
  for (Var v : xs) {
    const Node& nv = node(v, OpKind::Sum);
    if (nv.shape != shape) {
      shape_fail(OpKind::Sum, "shape mismatch " + shape_str(shape) + " vs " + shape_str(nv.shape));
    }
    for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] += nv.value[i];
    n.list.push_back(v.id);
    n.needs_grad = n.needs_grad || nv.needs_grad;
  }
  return push(std::move(n));
}

Var Tape::forward(OpKind kind, std::span<const Var> inputs) {
  auto arity = [&](std::size_t k) {
    if (inputs.size() != k) {
      shape_fail(kind, "expects " + std::to_string(k) + " inputs, got " + std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case OpKind::MatMul: arity(2); return matmul(inputs[0], inputs[1]);
    case OpKind::Add: arity(2); return add(inputs[0], inputs[1]);
    case OpKind::Sub: arity(2); return sub(inputs[0], inputs[1]);
    case OpKind::Mul: arity(2); return mul(inputs[0], inputs[1]);
    case OpKind::Div: arity(2); return div(inputs[0], inputs[1]);
    case OpKind::Scale: arity(2); return scale(inputs[0], inputs[1]);
    case OpKind::Relu: arity(1); return relu(inputs[0]);
    case OpKind::Tanh: arity(1); return tanh(inputs[0]);
    case OpKind::Exp: arity(1); return exp(inputs[0]);
    case OpKind::Neg: arity(1); return neg(inputs[0]);
    case OpKind::Log: arity(1); return log(inputs[0]);
    case OpKind::Sigmoid: arity(1); return sigmoid(inputs[0]);
    case OpKind::Softplus: arity(1); return softplus(inputs[0]);
    case OpKind::MeanAll: arity(1); return mean_all(inputs[0]);
    case OpKind::SumAll: arity(1); return sum_all(inputs[0]);
    case OpKind::Softmax: arity(1); return softmax(inputs[0]);
    case OpKind::StopGrad: arity(1); return stopgrad(inputs[0]);
    case OpKind::Concat: return concat(inputs);
    case OpKind::Sum: return sum(inputs);
    default:
      shape_fail(kind, "op needs extra parameters; use the dedicated method");
  }
}

std::vector<double>& Tape::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  const Node& nl = node(loss, OpKind::Leaf);
  if (nl.value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(nl.shape));
  }
  if (backward_done_) throw std::logic_error("backward: already called on this tape; reset first");
  backward_done_ = true;
  for (auto& n : nodes_) n.grad.clear();
  if (!nl.needs_grad) return;
  grad_of(loss.id)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.kind == OpKind::Leaf) {
      if (n.sink) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) n.sink[i] += n.grad[i];
      }
      continue;
    }
    backprop(n, id);
  }
}

void Tape::backprop(const Node& n, std::uint32_t id) {
  (void)id;
  const auto& g = n.grad;
  const std::size_t len = g.size();
  auto wants = [&](std::uint32_t in) { return in != Var::kInvalid && nodes_[in].needs_grad; };
  switch (n.kind) {
    case OpKind::MatMul: {
      const Node& na = nodes_[n.in[0]];
      const Node& nb = nodes_[n.in[1]];
      const std::size_t rows = na.shape.size() == 2 ? na.shape[0] : 1;
      const std::size_t inner = nb.shape[0];
      const std::size_t cols = nb.shape[1];
      if (wants(n.in[0])) {
        auto& ga = grad_of(n.in[0]);
        const Node& nb2 = nodes_[n.in[1]];
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < inner; ++k) {
            const double* brow = nb2.value.data() + k * cols;
            const double* grow = g.data() + r * cols;
            ga[r * inner + k] += dot(grow, brow, cols);
          }
      }
      if (wants(n.in[1])) {
        auto& gb = grad_of(n.in[1]);
        const Node& na2 = nodes_[n.in[0]];
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t k = 0; k < inner; ++k) {
            const double av = na2.value[r * inner + k];
            double* gbrow = gb.data() + k * cols;
            const double* grow = g.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gbrow[c] += av * grow[c];
          }
      }
      break;
    }
    case OpKind::Add:
      if (wants(n.in[0])) {
        auto& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i];
      }
      if (wants(n.in[1])) {
        auto& gb = grad_of(n.in[1]);
        for (std::size_t i = 0; i < len; ++i) gb[i] += g[i];
      }
      break;
    case OpKind::Sub:
      if (wants(n.in[0])) {
        auto& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i];
      }
      if (wants(n.in[1])) {
        auto& gb = grad_of(n.in[1]);
        for (std::size_t i = 0; i < len; ++i) gb[i] -= g[i];
      }
      break;
    case OpKind::Mul:
      if (wants(n.in[0])) {
        auto& ga = grad_of(n.in[0]);
        const auto& b = nodes_[n.in[1]].value;
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] * b[i];
      }
      if (wants(n.in[1])) {
        auto& gb = grad_of(n.in[1]);
        const auto& a = nodes_[n.in[0]].value;
        for (std::size_t i = 0; i < len; ++i) gb[i] += g[i] * a[i];
      }
      break;
    case OpKind::Div: {
      const auto& b = nodes_[n.in[1]].value;
      if (wants(n.in[0])) {
        auto& ga = grad_of(n.in[0]);
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] / b[i];
      }
      if (wants(n.in[1])) {
        auto& gb = grad_of(n.in[1]);
        const auto& b2 = nodes_[n.in[1]].value;
        for (std::size_t i = 0; i < len; ++i) gb[i] -= g[i] * n.value[i] / b2[i];
      }
      break;
    }
    case OpKind::ScalarMul: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] * n.scalar;
      break;
    }
    case OpKind::AddScalar: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i];
      break;
    }
    case OpKind::Scale: {
      const double c = nodes_[n.in[1]].value[0];
      if (wants(n.in[0])) {
        auto& gx = grad_of(n.in[0]);
        for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] * c;
      }
      if (wants(n.in[1])) {
        const auto& x = nodes_[n.in[0]].value;
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += g[i] * x[i];
        grad_of(n.in[1])[0] += s;
      }
      break;
    }
    case OpKind::Relu: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] += n.value[i] > 0.0 ? g[i] : 0.0;
      break;
    }
    case OpKind::Tanh: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case OpKind::Exp: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] * n.value[i];
      break;
    }
    case OpKind::Neg: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] -= g[i];
      break;
    }
    case OpKind::Log: {
      auto& gx = grad_of(n.in[0]);
      const auto& x = nodes_[n.in[0]].value;
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] / x[i];
      break;
    }
    case OpKind::Sigmoid: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case OpKind::Softplus: {
      auto& gx = grad_of(n.in[0]);
      const auto& x = nodes_[n.in[0]].value;
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] * stable_sigmoid(x[i]);
      break;
    }
    case OpKind::MeanAll:
    case OpKind::SumAll:
    case OpKind::MeanAxis: {
      auto& gx = grad_of(n.in[0]);
      const Node& nx = nodes_[n.in[0]];
      if (n.kind == OpKind::SumAll) {
        for (auto& v : gx) v += g[0];
      } else if (n.kind == OpKind::MeanAll || nx.shape.size() == 1) {
        const double w = g[0] / static_cast<double>(gx.size());
        for (auto& v : gx) v += w;
      } else {
        const std::size_t rows = nx.shape[0], cols = nx.shape[1];
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) {
            gx[r * cols + c] += n.index == 0 ? g[c] / static_cast<double>(rows)
                                             : g[r] / static_cast<double>(cols);
          }
      }
      break;
    }
    case OpKind::Concat: {
      std::size_t offset = 0;
      for (std::uint32_t in : n.list) {
        const std::size_t width = nodes_[in].value.size();
        if (nodes_[in].needs_grad) {
          auto& gx = grad_of(in);
          for (std::size_t i = 0; i < width; ++i) gx[i] += g[offset + i];
        }
        offset += width;
      }
      break;
    }
    case OpKind::Softmax: {
      auto& gx = grad_of(n.in[0]);
      const std::size_t cols = n.shape.back();
      for (std::size_t r = 0; r < len / cols; ++r) {
        const double* s = n.value.data() + r * cols;
        const double* gr = g.data() + r * cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * s[c];
        for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += s[c] * (gr[c] - dot);
      }
      break;
    }
    case OpKind::StopGrad:
      break;
    case OpKind::SelectMask: {
      auto& gx = grad_of(n.in[0]);
      for (std::size_t i = 0; i < len; ++i) gx[i] += g[i] * n.aux[i];
      break;
    }
    case OpKind::Pick:
      grad_of(n.in[0])[n.index] += g[0];
      break;
    case OpKind::Sum:
      for (std::uint32_t in : n.list) {
        if (!nodes_[in].needs_grad) continue;
        auto& gx = grad_of(in);
        for (std::size_t i = 0; i < len; ++i) gx[i] += g[i];
      }
      break;
    case OpKind::Leaf:
    case OpKind::Constant:
      break;
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

const Shape& Tape::shape(Var v) const { return node(v, OpKind::Leaf).shape; }

std::span<const double> Tape::value(Var v) const { return node(v, OpKind::Leaf).value; }

double Tape::item(Var v) const {
  const Node& n = node(v, OpKind::Leaf);
  if (n.value.size() != 1) throw ShapeError("item: shape " + shape_str(n.shape) + " is not a scalar");
  return n.value[0];
}

std::vector<double> Tape::grad(Var v) const {
  const Node& n = node(v, OpKind::Leaf);
  if (n.grad.empty()) return std::vector<double>(n.value.size(), 0.0);
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v, OpKind::Leaf).needs_grad; }

}  // namespace cofuse::core
