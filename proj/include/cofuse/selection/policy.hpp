#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cofuse/core/layers.hpp"

namespace cofuse::selection {

using core::ParamBinder;
using core::Tape;
using core::Tensor;
using core::Var;

inline constexpr int kReject = 0;
inline constexpr int kAccept = 1;

// Maps an (ego token, neighbour token) pair to two unnormalised logits,
// index 0 = Reject, 1 = Accept.
struct SelectionPolicy {
  core::Linear hidden;
  core::Linear out;
  double temperature = 1.0;

  static SelectionPolicy init(std::size_t hidden_dim, core::Rng& rng, double temperature = 1.0);
  void collect(std::vector<Tensor*>& params, std::vector<std::string>& names);
  std::vector<const Tensor*> parameters() const;
};

using Noise = std::array<double, 2>;

Var policy_logits(ParamBinder& bind, const SelectionPolicy& policy, Var rho_ego, Var rho_nbr);

// Standard Gumbel sample -log(-log U) for U in (0, 1).
double gumbel_from_uniform(double u);
double gumbel_noise(core::Rng& rng);
Noise gumbel_pair(core::Rng& rng);

// Accept probability softmax((l + g) / T)[1]. Throws if T <= 0.
Var soft_select(Tape& tape, Var logits, const Noise& g, double temperature);

// argmax_k (l^k + g^k); ties resolve to Reject.
int hard_select(std::span<const double> logits, const Noise& g);

// stopgrad(z_hard - p) + p: forward value z_hard, gradient that of p.
Var straight_through(Tape& tape, int z_hard, Var p);

struct PairDecision {
  std::size_t agent = 0;
  std::size_t modality = 0;
  std::array<double, 2> logits{0.0, 0.0};
  Noise gumbel{0.0, 0.0};
  double p = 0.0;
  int z = kAccept;
  // Training surrogate; invalid when the decision was not learned.
  Var z_train;
};

// Accept/reject state for every offered (collaborator, modality) pair of a
// frame, in offer order.
struct DecisionMatrix {
  std::vector<PairDecision> entries;

  const PairDecision* find(std::size_t agent, std::size_t modality) const;
  std::size_t accepted() const;
};

}  // namespace cofuse::selection
