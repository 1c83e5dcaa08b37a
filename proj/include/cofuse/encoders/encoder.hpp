#pragma once

#include <span>
#include <string>
#include <vector>

#include "cofuse/core/layers.hpp"

namespace cofuse::encoders {

using core::ParamBinder;
using core::Tape;
using core::Tensor;
using core::Var;

// Gaussian encoder for one modality: a shared two-layer tanh trunk feeding a
// feature head (mean embedding f) and an uncertainty head (log-variance u).
// One instance per global modality, shared by every agent.
struct GaussianEncoder {
  std::size_t modality = 0;
  core::Linear trunk1;
  core::Linear trunk2;
  core::Linear feature_head;
  core::Linear uncertainty_head;

  static GaussianEncoder init(std::size_t modality, std::size_t obs_dim, std::size_t hidden, std::size_t dim,
                              core::Rng& rng);

  std::size_t obs_dim() const { return trunk1.in_dim(); }
  std::size_t dim() const { return feature_head.out_dim(); }
  void collect(std::vector<Tensor*>& out, std::vector<std::string>& names);
  std::vector<const Tensor*> parameters() const;
};

struct GaussianFeatureVars {
  Var f;
  Var u;
  Var rho;
};

// Value snapshot of an encoding, as held by the sending agent.
struct GaussianFeature {
  std::vector<double> f;
  std::vector<double> u;
  double rho = 0.0;
};

// Global average of the log-variance map. Throws on an empty map.
Var pool_uncertainty(Tape& tape, Var u);

GaussianFeatureVars encode(ParamBinder& bind, const GaussianEncoder& enc, std::span<const double> x);

// Gradient-free convenience wrapper.
GaussianFeature encode_values(const GaussianEncoder& enc, std::span<const double> x);

}  // namespace cofuse::encoders
