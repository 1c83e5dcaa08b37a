#include "cofuse/training/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace cofuse::training {

Adam::Adam(std::span<core::Tensor* const> params, AdamConfig config) : config_(config) {
  for (const auto* p : params) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step(std::span<core::Tensor* const> params, const core::Gradients& grads, double lr) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw std::invalid_argument("adam: parameter/gradient count does not match optimiser state");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& w = params[k]->data;
    const auto& g = grads[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (g.size() != w.size()) throw std::invalid_argument("adam: gradient size mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace cofuse::training
