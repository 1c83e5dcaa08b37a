#include "cofuse/core/params.hpp"

#include <stdexcept>

namespace cofuse::core {

Gradients zeros_like(std::span<const Tensor* const> params) {
  Gradients g;
  g.reserve(params.size());
  for (const Tensor* p : params) g.emplace_back(p->size(), 0.0);
  return g;
}

ParamBinder::ParamBinder(Tape& tape, std::span<const Tensor* const> params, Gradients* sink)
    : tape_(tape), params_(params), sink_(sink), bound_(params.size()) {
  if (sink_ && sink_->size() != params_.size()) {
    throw std::invalid_argument("ParamBinder: gradient sink has " + std::to_string(sink_->size()) +
                                " buffers for " + std::to_string(params_.size()) + " parameters");
  }
}

Var ParamBinder::operator()(const Tensor& p) {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (params_[k] != &p) continue;
    if (!bound_[k].valid()) {
      bound_[k] = sink_ ? tape_.leaf(p, (*sink_)[k]) : tape_.leaf(p, {});
    }
    return bound_[k];
  }
  throw std::invalid_argument("ParamBinder: tensor is not part of the bound parameter list");
}

}  // namespace cofuse::core
