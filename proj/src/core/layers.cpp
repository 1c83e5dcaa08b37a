#include "cofuse/core/layers.hpp"

#include <cmath>

namespace cofuse::core {

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(in * out);
  for (auto& v : w) v = dist(rng);
  return Linear{Tensor::matrix(in, out, std::move(w), true), Tensor::zeros({out}, true)};
}

Var Linear::operator()(ParamBinder& bind, Var x) const {
  Tape& tape = bind.tape();
  return tape.add(tape.matmul(x, bind(weight)), bind(bias));
}

void Linear::collect(std::vector<Tensor*>& out, std::vector<std::string>& names, const std::string& prefix) {
  out.push_back(&weight);
  names.push_back(prefix + ".weight");
  out.push_back(&bias);
  names.push_back(prefix + ".bias");
}

void Linear::append(std::vector<const Tensor*>& out) const {
  out.push_back(&weight);
  out.push_back(&bias);
}

}  // namespace cofuse::core
