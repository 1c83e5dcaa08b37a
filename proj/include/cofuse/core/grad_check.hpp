#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cofuse/core/params.hpp"
#include "cofuse/core/tape.hpp"

namespace cofuse::core {

using ScalarFn = std::function<Var(Tape&, Var)>;
using MultiScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_coord = 0;
  double autodiff = 0.0;
  double numeric = 0.0;
};

// Coordinates whose gradient magnitude is below this floor are compared in
// absolute terms against it.
inline constexpr double kGradCheckFloor = 1e-4;

double relative_error(double autodiff, double numeric);

// Max relative error between reverse-mode gradients and central differences
// (f(x+h e_i) - f(x-h e_i)) / 2h. Throws std::invalid_argument if f is not
// scalar-valued or h lies outside [1e-7, 1e-3].
double grad_check(const ScalarFn& f, const Tensor& x, double h);
GradCheckReport grad_check(const MultiScalarFn& f, std::span<const Tensor> xs, double h);

// Same check over the parameter tensors of a network. Each coordinate is
// perturbed in place and restored; f must bind parameters through the binder.
using ParamFn = std::function<Var(ParamBinder&)>;
GradCheckReport grad_check_params(const ParamFn& f, std::span<Tensor* const> params, double h);

}  // namespace cofuse::core
