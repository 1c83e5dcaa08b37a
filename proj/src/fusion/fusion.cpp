#include "cofuse/fusion/fusion.hpp"

#include <stdexcept>

namespace cofuse::fusion {

FusionLayer FusionLayer::init(std::size_t n_modalities, std::size_t dim, std::size_t proj_dim,
                              std::size_t hidden1, std::size_t hidden2, core::Rng& rng) {
  FusionLayer layer;
  for (std::size_t m = 0; m < n_modalities; ++m) {
    layer.projections.push_back(core::Linear::init(dim, proj_dim, rng));
    layer.missing.push_back(Tensor::zeros({proj_dim}, true));
  }
  layer.head1 = core::Linear::init(n_modalities * proj_dim, hidden1, rng);
  layer.head2 = core::Linear::init(hidden1, hidden2, rng);
  layer.head3 = core::Linear::init(hidden2, 1, rng);
  return layer;
}

void FusionLayer::collect(std::vector<Tensor*>& params, std::vector<std::string>& names) {
  for (std::size_t m = 0; m < projections.size(); ++m) {
    projections[m].collect(params, names, "fusion.proj" + std::to_string(m));
    params.push_back(&missing[m]);
    names.push_back("fusion.missing" + std::to_string(m));
  }
  head1.collect(params, names, "fusion.head1");
  head2.collect(params, names, "fusion.head2");
  head3.collect(params, names, "fusion.head3");
}

std::vector<const Tensor*> FusionLayer::parameters() const {
  std::vector<const Tensor*> params;
  for (std::size_t m = 0; m < projections.size(); ++m) {
    projections[m].append(params);
    params.push_back(&missing[m]);
  }
  head1.append(params);
  head2.append(params);
  head3.append(params);
  return params;
}

Var precision(Tape& tape, Var u) { return tape.exp(tape.neg(u)); }

std::optional<Var> aggregate_modality(Tape& tape, std::span<const ProviderEntry> entries, double eps,
                                      Weighting weighting) {
  if (entries.empty()) return std::nullopt;
  const auto& shape = tape.shape(entries.front().f);
  bool any = false;
  for (const auto& e : entries) {
    if (tape.shape(e.f) != shape || tape.shape(e.u) != shape) {
      throw core::ShapeError("aggregate_modality: provider shapes " + core::shape_str(tape.shape(e.f)) + "/" +
                             core::shape_str(tape.shape(e.u)) + " differ from " + core::shape_str(shape));
    }
    any = any || e.z_value != 0.0;
  }
  if (!any) return std::nullopt;

  std::vector<Var> weights;
  std::vector<Var> weighted;
  weights.reserve(entries.size());
  weighted.reserve(entries.size());
  Var ones;
  for (const auto& e : entries) {
    Var w;
    if (weighting == Weighting::Precision) {
      w = precision(tape, e.u);
      if (e.z.valid()) w = tape.scale(w, e.z);
    } else if (e.z.valid()) {
      if (!ones.valid()) ones = tape.constant(std::vector<double>(core::numel(shape), 1.0));
      w = tape.scale(ones, e.z);
    } else {
      if (!ones.valid()) ones = tape.constant(std::vector<double>(core::numel(shape), 1.0));
      w = ones;
    }
    weights.push_back(w);
    weighted.push_back(tape.mul(w, e.f));
  }
  const Var num = tape.sum(weighted);
  const Var den = tape.add_scalar(tape.sum(weights), eps);
  return tape.div(num, den);
}

Var fuse(ParamBinder& bind, const FusionLayer& layer, std::span<const std::optional<Var>> aggregates) {
  if (aggregates.size() != layer.n_modalities()) {
    throw core::ShapeError("fuse: " + std::to_string(aggregates.size()) + " modality slots for a layer with " +
                           std::to_string(layer.n_modalities()));
  }
  Tape& tape = bind.tape();
  std::vector<Var> parts;
  parts.reserve(aggregates.size());
  for (std::size_t m = 0; m < aggregates.size(); ++m) {
    parts.push_back(aggregates[m] ? layer.projections[m](bind, *aggregates[m]) : bind(layer.missing[m]));
  }
  return tape.concat(parts);
}

Var predict(ParamBinder& bind, const FusionLayer& layer, Var fused) {
  Tape& tape = bind.tape();
  if (tape.value(fused).size() != layer.head1.in_dim()) {
    throw core::ShapeError("predict: fused vector of shape " + core::shape_str(tape.shape(fused)) +
                           " but head expects " + std::to_string(layer.head1.in_dim()));
  }
  const Var h1 = tape.tanh(layer.head1(bind, fused));
  const Var h2 = tape.tanh(layer.head2(bind, h1));
  return layer.head3(bind, h2);
}

}  // namespace cofuse::fusion
