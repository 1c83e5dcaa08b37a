#include "cofuse/core/tensor.hpp"

#include <sstream>

namespace cofuse::core {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> d, bool rg)
    : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
  for (auto dim : shape) {
    if (dim == 0) throw ShapeError("tensor: zero-sized dimension in shape " + shape_str(shape));
  }
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " holds " + std::to_string(numel(shape)) +
                     " elements but data has " + std::to_string(data.size()));
  }
  if (requires_grad) grad.assign(data.size(), 0.0);
}

Tensor Tensor::zeros(Shape s, bool rg) {
  const auto n = numel(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0), rg);
}

Tensor Tensor::scalar(double v, bool rg) { return Tensor({1}, {v}, rg); }

Tensor Tensor::vector(std::vector<double> v, bool rg) {
  const auto n = v.size();
  return Tensor({n}, std::move(v), rg);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v, bool rg) {
  return Tensor({rows, cols}, std::move(v), rg);
}

double Tensor::item() const {
  if (data.size() != 1) throw ShapeError("item: tensor of shape " + shape_str(shape) + " is not a scalar");
  return data[0];
}

void Tensor::zero_grad() { grad.assign(data.size(), 0.0); }

}  // namespace cofuse::core
