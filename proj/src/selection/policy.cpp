#include "cofuse/selection/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace cofuse::selection {

SelectionPolicy SelectionPolicy::init(std::size_t hidden_dim, core::Rng& rng, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("selection policy: temperature must be positive");
  SelectionPolicy p;
  p.hidden = core::Linear::init(2, hidden_dim, rng);
  p.out = core::Linear::init(hidden_dim, 2, rng);
  p.temperature = temperature;
  return p;
}

void SelectionPolicy::collect(std::vector<Tensor*>& params, std::vector<std::string>& names) {
  hidden.collect(params, names, "policy.hidden");
  out.collect(params, names, "policy.out");
}

std::vector<const Tensor*> SelectionPolicy::parameters() const {
  std::vector<const Tensor*> params;
  hidden.append(params);
  out.append(params);
  return params;
}

Var policy_logits(ParamBinder& bind, const SelectionPolicy& policy, Var rho_ego, Var rho_nbr) {
  Tape& tape = bind.tape();
  const std::array<Var, 2> pair{rho_ego, rho_nbr};
  const Var in = tape.concat(pair);
  return policy.out(bind, tape.tanh(policy.hidden(bind, in)));
}

double gumbel_from_uniform(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("gumbel: uniform draw must lie in (0,1)");
  return -std::log(-std::log(u));
}

double gumbel_noise(core::Rng& rng) { return gumbel_from_uniform(core::uniform_open01(rng)); }

Noise gumbel_pair(core::Rng& rng) {
  const double g0 = gumbel_noise(rng);
  const double g1 = gumbel_noise(rng);
  return {g0, g1};
}

Var soft_select(Tape& tape, Var logits, const Noise& g, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("soft_select: temperature must be positive");
  if (tape.value(logits).size() != 2) {
    throw core::ShapeError("soft_select: expects two logits, got shape " + core::shape_str(tape.shape(logits)));
  }
  Var noisy = tape.add(logits, tape.constant(std::vector<double>{g[0], g[1]}));
  if (temperature != 1.0) noisy = tape.scalar_mul(noisy, 1.0 / temperature);
  return tape.pick(tape.softmax(noisy), kAccept);
}

int hard_select(std::span<const double> logits, const Noise& g) {
  if (logits.size() != 2) throw std::invalid_argument("hard_select: expects two logits");
  return logits[1] + g[1] > logits[0] + g[0] ? kAccept : kReject;
}

Var straight_through(Tape& tape, int z_hard, Var p) {
  const Var hard = tape.constant(static_cast<double>(z_hard));
  return tape.add(tape.stopgrad(tape.sub(hard, p)), p);
}

const PairDecision* DecisionMatrix::find(std::size_t agent, std::size_t modality) const {
  for (const auto& e : entries) {
    if (e.agent == agent && e.modality == modality) return &e;
  }
  return nullptr;
}

std::size_t DecisionMatrix::accepted() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.z == kAccept ? 1 : 0;
  return n;
}

}  // namespace cofuse::selection
