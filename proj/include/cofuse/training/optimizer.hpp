#pragma once

#include <span>
#include <vector>

#include "cofuse/core/params.hpp"

namespace cofuse::training {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers follow the parameter order given
// at construction.
class Adam {
 public:
  Adam(std::span<core::Tensor* const> params, AdamConfig config = {});

  void step(std::span<core::Tensor* const> params, const core::Gradients& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

}  // namespace cofuse::training
