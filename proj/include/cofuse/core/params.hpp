#pragma once

#include <span>
#include <vector>

#include "cofuse/core/tape.hpp"

namespace cofuse::core {

// One gradient buffer per parameter tensor, aligned with a parameter list.
using Gradients = std::vector<std::vector<double>>;

Gradients zeros_like(std::span<const Tensor* const> params);

// Lazily binds parameter tensors as leaves of one tape. With a gradient
// sink, backward accumulates into sink[k] for the k-th parameter; without
// one the leaves are gradient-free (evaluation).
class ParamBinder {
 public:
  ParamBinder(Tape& tape, std::span<const Tensor* const> params, Gradients* sink = nullptr);

  Var operator()(const Tensor& p);
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  std::span<const Tensor* const> params_;
  Gradients* sink_;
  std::vector<Var> bound_;
};

}  // namespace cofuse::core
