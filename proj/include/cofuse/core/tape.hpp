#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cofuse/core/tensor.hpp"

namespace cofuse::core {

enum class OpKind : std::uint8_t {
  Leaf,
  Constant,
  MatMul,
  Add,
  Sub,
  Mul,
  Div,
  ScalarMul,
  AddScalar,
  Scale,
  Relu,
  Tanh,
  Exp,
  Neg,
  Log,
  Sigmoid,
  Softplus,
  MeanAll,
  SumAll,
  MeanAxis,
  Concat,
  Softmax,
  StopGrad,
  SelectMask,
  Pick,
  Sum,
};

std::string_view op_name(OpKind kind);

// Handle to a node recorded on a Tape. Only meaningful for the tape that
// produced it.
struct Var {
  static constexpr std::uint32_t kInvalid = 0xffffffffu;
  std::uint32_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Define-by-run recorder. Nodes are appended in evaluation order, so the
// node list is already topologically sorted and backward is a single reverse
// sweep. A tape is single-threaded; independent tapes share nothing.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  // Leaf bound to a tensor. If t.requires_grad, backward accumulates into
  // t.grad.
  Var leaf(Tensor& t);
  // Leaf whose gradient is accumulated into an external buffer instead
  // (empty span: no gradient collected).
  Var leaf(const Tensor& t, std::span<double> grad_sink);
  Var constant(Tensor t);
  Var constant(double v);
  Var constant(std::vector<double> v);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var scalar_mul(Var x, double c);
  Var add_scalar(Var x, double c);
  // x * s where s has exactly one element.
  Var scale(Var x, Var s);
  Var relu(Var x);
  Var tanh(Var x);
  Var exp(Var x);
  Var neg(Var x);
  Var log(Var x);
  Var sigmoid(Var x);
  Var softplus(Var x);
  Var mean_all(Var x);
  Var sum_all(Var x);
  Var mean_axis(Var x, std::size_t axis);
  Var concat(std::span<const Var> xs);
  Var softmax(Var x);
  Var stopgrad(Var x);
  // x * mask elementwise with a constant mask (no gradient to the mask).
  Var select_mask(Var x, std::vector<double> mask);
  Var pick(Var x, std::size_t index);
  Var sum(std::span<const Var> xs);

  // Generic entry for the parameter-free op kinds.
  Var forward(OpKind kind, std::span<const Var> inputs);

  void backward(Var loss);
  void reset();

  const Shape& shape(Var v) const;
  std::span<const double> value(Var v) const;
  double item(Var v) const;
  // Gradient of the last backward loss with respect to v (zeros if none).
  std::vector<double> grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind kind = OpKind::Constant;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::array<std::uint32_t, 2> in{Var::kInvalid, Var::kInvalid};
    std::vector<std::uint32_t> list;
    std::vector<double> aux;
    double scalar = 0.0;
    std::size_t index = 0;
    double* sink = nullptr;
    bool needs_grad = false;
  };

  const Node& node(Var v, OpKind kind_for_error) const;
  Var push(Node n);
  Var unary(OpKind kind, Var x);
  Var binary_same(OpKind kind, Var a, Var b);
  std::vector<double>& grad_of(std::uint32_t id);
  void backprop(const Node& n, std::uint32_t id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace cofuse::core
