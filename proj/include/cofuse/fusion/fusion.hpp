#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cofuse/core/layers.hpp"

namespace cofuse::fusion {

using core::ParamBinder;
using core::Tape;
using core::Tensor;
using core::Var;

inline constexpr double kDefaultEps = 1e-8;

// Per-modality projection, learned stand-in for modalities with no accepted
// provider, and a three-layer tanh prediction head producing one logit.
struct FusionLayer {
  std::vector<core::Linear> projections;
  std::vector<Tensor> missing;
  core::Linear head1;
  core::Linear head2;
  core::Linear head3;

  static FusionLayer init(std::size_t n_modalities, std::size_t dim, std::size_t proj_dim, std::size_t hidden1,
                          std::size_t hidden2, core::Rng& rng);
  std::size_t n_modalities() const { return projections.size(); }
  std::size_t proj_dim() const { return projections.front().out_dim(); }
  void collect(std::vector<Tensor*>& params, std::vector<std::string>& names);
  std::vector<const Tensor*> parameters() const;
};

// One provider of a modality. z is the (surrogate) selection mask; an invalid
// z means the provider is always included (the ego's own features).
struct ProviderEntry {
  Var f;
  Var u;
  Var z;
  double z_value = 1.0;
};

enum class Weighting { Precision, Uniform };

// exp(-u): the precision implied by a log-variance map.
Var precision(Tape& tape, Var u);

// sum_i z_i w_i f_i / (sum_i z_i w_i + eps), elementwise, with w = exp(-u)
// (Precision) or w = 1 (Uniform). Returns nullopt when no provider has a
// non-zero mask in forward value; the caller then substitutes the learned
// missing-modality vector so rejected features cannot leak through eps.
std::optional<Var> aggregate_modality(Tape& tape, std::span<const ProviderEntry> entries,
                                      double eps = kDefaultEps, Weighting weighting = Weighting::Precision);

// Concatenation over modalities (fixed order) of project_m(aggregate) or the
// missing-modality vector.
Var fuse(ParamBinder& bind, const FusionLayer& layer, std::span<const std::optional<Var>> aggregates);

Var predict(ParamBinder& bind, const FusionLayer& layer, Var fused);

}  // namespace cofuse::fusion
