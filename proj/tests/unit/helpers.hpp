#pragma once

#include <random>
#include <vector>

#include "cofuse/core/random.hpp"
#include "cofuse/core/tensor.hpp"

namespace testing {

inline cofuse::core::Tensor random_tensor(cofuse::core::Shape shape, cofuse::core::Rng& rng, double lo = -1.0,
                                          double hi = 1.0) {
  auto t = cofuse::core::Tensor::zeros(std::move(shape), true);
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data) v = d(rng);
  return t;
}

inline std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace testing
