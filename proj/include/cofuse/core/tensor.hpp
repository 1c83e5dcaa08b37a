#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cofuse::core {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major array of doubles. Parameters and plain values live here;
// recorded computations live on a Tape.
struct Tensor {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> d, bool rg = false);

  static Tensor zeros(Shape s, bool rg = false);
  static Tensor scalar(double v, bool rg = false);
  static Tensor vector(std::vector<double> v, bool rg = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v, bool rg = false);

  std::size_t size() const { return data.size(); }
  double item() const;
  void zero_grad();
};

}  // namespace cofuse::core
