#include "cofuse/encoders/encoder.hpp"

#include <stdexcept>

namespace cofuse::encoders {

GaussianEncoder GaussianEncoder::init(std::size_t modality, std::size_t obs_dim, std::size_t hidden,
                                      std::size_t dim, core::Rng& rng) {
  GaussianEncoder enc;
  enc.modality = modality;
  enc.trunk1 = core::Linear::init(obs_dim, hidden, rng);
  enc.trunk2 = core::Linear::init(hidden, hidden, rng);
  enc.feature_head = core::Linear::init(hidden, dim, rng);
  enc.uncertainty_head = core::Linear::init(hidden, dim, rng);
  return enc;
}

void GaussianEncoder::collect(std::vector<Tensor*>& out, std::vector<std::string>& names) {
  const std::string p = "encoder" + std::to_string(modality);
  trunk1.collect(out, names, p + ".trunk1");
  trunk2.collect(out, names, p + ".trunk2");
  feature_head.collect(out, names, p + ".feature");
  uncertainty_head.collect(out, names, p + ".uncertainty");
}

std::vector<const Tensor*> GaussianEncoder::parameters() const {
  std::vector<const Tensor*> out;
  trunk1.append(out);
  trunk2.append(out);
  feature_head.append(out);
  uncertainty_head.append(out);
  return out;
}

Var pool_uncertainty(Tape& tape, Var u) {
  if (tape.value(u).empty()) throw std::invalid_argument("pool_uncertainty: empty uncertainty map");
  return tape.mean_all(u);
}

GaussianFeatureVars encode(ParamBinder& bind, const GaussianEncoder& enc, std::span<const double> x) {
  if (x.size() != enc.obs_dim()) {
    throw std::invalid_argument("encode: modality " + std::to_string(enc.modality) + " expects " +
                                std::to_string(enc.obs_dim()) + " inputs, got " + std::to_string(x.size()));
  }
  Tape& tape = bind.tape();
  const Var in = tape.constant(std::vector<double>(x.begin(), x.end()));
  const Var h1 = tape.tanh(enc.trunk1(bind, in));
  const Var h2 = tape.tanh(enc.trunk2(bind, h1));
  GaussianFeatureVars out;
  out.f = enc.feature_head(bind, h2);
  out.u = enc.uncertainty_head(bind, h2);
  out.rho = pool_uncertainty(tape, out.u);
  return out;
}

GaussianFeature encode_values(const GaussianEncoder& enc, std::span<const double> x) {
  Tape tape;
  const auto params = enc.parameters();
  ParamBinder bind(tape, params);
  const auto vars = encode(bind, enc, x);
  GaussianFeature out;
  out.f.assign(tape.value(vars.f).begin(), tape.value(vars.f).end());
  out.u.assign(tape.value(vars.u).begin(), tape.value(vars.u).end());
  out.rho = tape.item(vars.rho);
  return out;
}

}  // namespace cofuse::encoders
