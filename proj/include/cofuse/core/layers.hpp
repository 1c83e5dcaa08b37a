#pragma once

#include <string>
#include <vector>

#include "cofuse/core/params.hpp"
#include "cofuse/core/random.hpp"

namespace cofuse::core {

// y = x W + b. W is (in, out); weights start uniform in +-1/sqrt(in), bias at zero.
struct Linear {
  Tensor weight;
  Tensor bias;

  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  std::size_t in_dim() const { return weight.shape[0]; }
  std::size_t out_dim() const { return weight.shape[1]; }

  Var operator()(ParamBinder& bind, Var x) const;
  void collect(std::vector<Tensor*>& out, std::vector<std::string>& names, const std::string& prefix);
  void append(std::vector<const Tensor*>& out) const;
};

}  // namespace cofuse::core
