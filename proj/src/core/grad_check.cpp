#include "cofuse/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cofuse::core {

namespace {

double eval(const MultiScalarFn& f, std::span<const Tensor> xs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(xs.size());
  for (const auto& x : xs) vars.push_back(tape.leaf(x, {}));
  const Var out = f(tape, vars);
  if (tape.value(out).size() != 1) {
    throw std::invalid_argument("grad_check: function output has shape " + shape_str(tape.shape(out)) +
                                ", expected a scalar");
  }
  return tape.item(out);
}

}  // namespace

double relative_error(double autodiff, double numeric) {
  const double scale = std::max({std::abs(autodiff), std::abs(numeric), kGradCheckFloor});
  return std::abs(autodiff - numeric) / scale;
}

GradCheckReport grad_check(const MultiScalarFn& f, std::span<const Tensor> xs, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw std::invalid_argument("grad_check: step size " + std::to_string(h) + " outside [1e-7, 1e-3]");
  }
  std::vector<std::vector<double>> grads;
  grads.reserve(xs.size());
  for (const auto& x : xs) grads.emplace_back(x.size(), 0.0);

  {
    Tape tape;
    std::vector<Var> vars;
    for (std::size_t i = 0; i < xs.size(); ++i) vars.push_back(tape.leaf(xs[i], grads[i]));
    const Var out = f(tape, vars);
    if (tape.value(out).size() != 1) {
      throw std::invalid_argument("grad_check: function output has shape " + shape_str(tape.shape(out)) +
                                  ", expected a scalar");
    }
    tape.backward(out);
  }

  GradCheckReport report;
  std::vector<Tensor> probe(xs.begin(), xs.end());
  for (std::size_t t = 0; t < probe.size(); ++t) {
    for (std::size_t i = 0; i < probe[t].size(); ++i) {
      const double orig = probe[t].data[i];
      probe[t].data[i] = orig + h;
      const double up = eval(f, probe);
      probe[t].data[i] = orig - h;
      const double down = eval(f, probe);
      probe[t].data[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(grads[t][i], numeric);
      if (err > report.max_rel_error || (t == 0 && i == 0)) {
        report = {err, t, i, grads[t][i], numeric};
      }
    }
  }
  return report;
}

GradCheckReport grad_check_params(const ParamFn& f, std::span<Tensor* const> params, double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw std::invalid_argument("grad_check: step size " + std::to_string(h) + " outside [1e-7, 1e-3]");
  }
  std::vector<const Tensor*> cparams(params.begin(), params.end());
  auto run = [&](Gradients* sink) {
    Tape tape;
    ParamBinder bind(tape, cparams, sink);
    const Var out = f(bind);
    if (tape.value(out).size() != 1) {
      throw std::invalid_argument("grad_check: function output has shape " + shape_str(tape.shape(out)) +
                                  ", expected a scalar");
    }
    if (sink) tape.backward(out);
    return tape.item(out);
  };
  Gradients grads = zeros_like(cparams);
  run(&grads);

  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& data = params[t]->data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      const double up = run(nullptr);
      data[i] = orig - h;
      const double down = run(nullptr);
      data[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(grads[t][i], numeric);
      if (err > report.max_rel_error || (t == 0 && i == 0)) report = {err, t, i, grads[t][i], numeric};
    }
  }
  return report;
}

double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  const MultiScalarFn wrapped = [&](Tape& tape, std::span<const Var> vars) { return f(tape, vars[0]); };
  return grad_check(wrapped, std::span<const Tensor>(&x, 1), h).max_rel_error;
}

}  // namespace cofuse::core
