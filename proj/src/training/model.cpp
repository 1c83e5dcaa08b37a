#include "cofuse/training/model.hpp"

#include <stdexcept>

namespace cofuse::training {

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 7> kVariantNames{{
    {Variant::Full, "full"},
    {Variant::NoSelect, "no_select"},
    {Variant::NoBayes, "no_bayes"},
    {Variant::Neither, "neither"},
    {Variant::SingleAgent, "single_agent"},
    {Variant::BlindFusion, "blind_fusion"},
    {Variant::AgentLevel, "agent_level"},
}};

struct EncodedVars {
  std::size_t agent;
  std::size_t modality;
  encoders::GaussianFeatureVars vars;
};

const EncodedVars* find(const std::vector<EncodedVars>& enc, std::size_t agent, std::size_t modality) {
  for (const auto& e : enc) {
    if (e.agent == agent && e.modality == modality) return &e;
  }
  return nullptr;
}

encoders::GaussianFeature snapshot(const Tape& tape, const encoders::GaussianFeatureVars& v) {
  encoders::GaussianFeature g;
  g.f.assign(tape.value(v.f).begin(), tape.value(v.f).end());
  g.u.assign(tape.value(v.u).begin(), tape.value(v.u).end());
  g.rho = tape.item(v.rho);
  return g;
}

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [k, name] : kVariantNames) {
    if (k == v) return name;
  }
  return "unknown";
}

Variant parse_variant(std::string_view tag) {
  for (const auto& [k, name] : kVariantNames) {
    if (name == tag) return k;
  }
  throw std::invalid_argument("unknown variant '" + std::string(tag) +
                              "' (expected full, no_select, no_bayes, neither, single_agent, blind_fusion, "
                              "agent_level)");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> all{Variant::Full,        Variant::NoSelect,    Variant::NoBayes,
                                        Variant::Neither,     Variant::SingleAgent, Variant::BlindFusion,
                                        Variant::AgentLevel};
  return all;
}

VariantTraits traits(Variant v) {
  switch (v) {
    case Variant::Full: return {true, true, true, false, true};
    case Variant::NoSelect: return {true, false, true, false, false};
    case Variant::NoBayes: return {true, true, false, false, true};
    case Variant::Neither: return {true, false, false, false, false};
    case Variant::SingleAgent: return {false, false, true, false, false};
    case Variant::BlindFusion: return {true, false, false, false, false};
    case Variant::AgentLevel: return {true, true, true, true, true};
  }
  throw std::invalid_argument("unknown variant");
}

Model Model::init(const world::ScenarioConfig& scenario, const ModelConfig& config, Variant variant,
                  std::uint64_t seed) {
  scenario.validate();
  Model m;
  m.scenario = scenario;
  m.config = config;
  m.variant = variant;
  auto rng = core::make_rng({seed, 0x1417u});
  for (std::size_t k = 0; k < scenario.n_modalities(); ++k) {
    m.encoders.push_back(
        encoders::GaussianEncoder::init(k, scenario.channels[k].obs_dim, config.hidden, config.dim, rng));
  }
  m.policy = selection::SelectionPolicy::init(config.policy_hidden, rng, config.temperature);
  m.fusion = fusion::FusionLayer::init(scenario.n_modalities(), config.dim, config.proj_dim, config.head_hidden1,
                                       config.head_hidden2, rng);
  return m;
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out;
  std::vector<std::string> names;
  for (auto& e : encoders) e.collect(out, names);
  policy.collect(out, names);
  fusion.collect(out, names);
  return out;
}

std::vector<const Tensor*> Model::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& e : encoders) {
    const auto p = e.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  const auto pp = policy.parameters();
  out.insert(out.end(), pp.begin(), pp.end());
  const auto fp = fusion.parameters();
  out.insert(out.end(), fp.begin(), fp.end());
  return out;
}

std::vector<std::string> Model::parameter_names() const {
  Model& self = const_cast<Model&>(*this);
  std::vector<Tensor*> out;
  std::vector<std::string> names;
  for (auto& e : self.encoders) e.collect(out, names);
  self.policy.collect(out, names);
  self.fusion.collect(out, names);
  return names;
}

Model make_variant(Variant v, Model model) {
  (void)traits(v);
  model.variant = v;
  return model;
}

FrameOutput forward_frame(ParamBinder& bind, const Model& model, const world::Frame& frame, Mode mode,
                          core::Rng* noise, const EvalHooks* hooks) {
  Tape& tape = bind.tape();
  const auto tr = traits(model.variant);
  const auto& sc = model.scenario;
  const std::size_t n_mod = sc.n_modalities();
  const bool train = mode == Mode::Train;
  if (train && tr.select && !noise) throw std::invalid_argument("forward_frame: training needs a noise source");

  FrameOutput out;
  out.comm.frame = frame.index;
  const std::vector<std::size_t> neighbors = tr.collaborate ? frame.neighbor_set : std::vector<std::size_t>{};
  auto present = [&](std::size_t agent) {
    if (agent == 0) return true;
    for (auto n : neighbors) {
      if (n == agent) return true;
    }
    return false;
  };

  // Stage 1: every agent in the exchange encodes its own observations.
  std::vector<EncodedVars> enc;
  for (const auto& obs : frame.observations) {
    if (!present(obs.agent)) continue;
    if (!sc.carries(obs.agent, obs.modality)) {
      throw std::invalid_argument("forward_frame: agent " + std::to_string(obs.agent) +
                                  " reports an observation for a modality it does not carry");
    }
    auto vars = encoders::encode(bind, model.encoders.at(obs.modality), obs.x);
    out.u_list.push_back(vars.u);
    out.tokens.push_back({obs.agent, obs.modality, tape.item(vars.rho), obs.corruption_applied});
    enc.push_back({obs.agent, obs.modality, vars});
  }

  // Offered pairs in a fixed order: neighbours ascending, modalities as observed.
  struct Offer {
    std::size_t agent;
    std::size_t modality;
  };
  std::vector<Offer> offers;
  for (auto agent : neighbors) {
    for (const auto& obs : frame.observations) {
      if (obs.agent == agent) offers.push_back({agent, obs.modality});
    }
  }
  out.comm.offered_pairs = offers.size();

  // Stage 2: handshake and selection.
  comms::EncodedStore store;
  std::vector<comms::MetaPacket> metas;
  if (!train) {
    for (const auto& e : enc) {
      if (e.agent != 0) store.put(e.agent, e.modality, snapshot(tape, e.vars));
    }
  }
  if (tr.handshake && !offers.empty()) {
    if (train) {
      out.comm.meta_bytes = comms::kMetaPacketBytes * offers.size();
    } else {
      auto hs = comms::handshake(frame, store);
      out.comm.meta_bytes = hs.bytes;
      metas = std::move(hs.received);
    }
  }
  auto received_rho = [&](std::size_t agent, std::size_t modality) -> double {
    for (const auto& m : metas) {
      if (m.sender == agent && m.modality == modality) return static_cast<double>(m.rho);
    }
    throw std::logic_error("forward_frame: missing meta-packet");
  };
  // Token of a collaborator as seen by the ego's policy.
  auto nbr_token = [&](std::size_t agent, std::size_t modality) -> Var {
    if (train) return find(enc, agent, modality)->vars.rho;
    return tape.constant(received_rho(agent, modality));
  };
  auto ego_token = [&](std::size_t modality) -> Var {
    if (const auto* e = find(enc, 0, modality)) return e->vars.rho;
    return tape.constant(model.config.sentinel_rho);
  };
  auto mean_tokens = [&](std::vector<Var> toks) -> Var {
    const Var s = tape.sum(toks);
    return tape.scalar_mul(s, 1.0 / static_cast<double>(toks.size()));
  };

  auto decide = [&](Var logits, selection::PairDecision& d) {
    const auto l = tape.value(logits);
    d.logits = {l[0], l[1]};
    if (train) {
      d.gumbel = selection::gumbel_pair(*noise);
      const Var p = selection::soft_select(tape, logits, d.gumbel, model.policy.temperature);
      d.p = tape.item(p);
      d.z = selection::hard_select(l, d.gumbel);
      d.z_train = selection::straight_through(tape, d.z, p);
    } else {
      d.gumbel = {0.0, 0.0};
      const Var p = selection::soft_select(tape, logits, d.gumbel, model.policy.temperature);
      d.p = tape.item(p);
      d.z = selection::hard_select(l, d.gumbel);
    }
  };

  auto& decisions = out.decisions.entries;
  for (const auto& o : offers) {
    selection::PairDecision d;
    d.agent = o.agent;
    d.modality = o.modality;
    decisions.push_back(d);
  }
  if (tr.select) {
    if (tr.agent_level) {
      std::vector<Var> ego_toks;
      for (std::size_t m = 0; m < n_mod; ++m) {
        if (const auto* e = find(enc, 0, m)) ego_toks.push_back(e->vars.rho);
      }
      const Var ego_mean = mean_tokens(ego_toks);
      for (auto agent : neighbors) {
        std::vector<Var> toks;
        for (const auto& d : decisions) {
          if (d.agent == agent) toks.push_back(nbr_token(agent, d.modality));
        }
        if (toks.empty()) continue;
        const Var logits = selection::policy_logits(bind, model.policy, ego_mean, mean_tokens(toks));
        selection::PairDecision shared;
        decide(logits, shared);
        for (auto& d : decisions) {
          if (d.agent != agent) continue;
          d.logits = shared.logits;
          d.gumbel = shared.gumbel;
          d.p = shared.p;
          d.z = shared.z;
          d.z_train = shared.z_train;
        }
      }
    } else {
      for (auto& d : decisions) {
        const Var logits =
            selection::policy_logits(bind, model.policy, ego_token(d.modality), nbr_token(d.agent, d.modality));
        decide(logits, d);
      }
    }
  }
  out.comm.accepted_pairs = out.decisions.accepted();

  // Stage 3: transmission and aggregation.
  std::vector<std::vector<fusion::ProviderEntry>> pools(n_mod);
  for (const auto& e : enc) {
    if (e.agent == 0) pools[e.modality].push_back({e.vars.f, e.vars.u, Var{}, 1.0});
  }
  if (train) {
    out.comm.feature_bytes = comms::feature_packet_bytes(model.config.dim) * out.comm.accepted_pairs;
    for (const auto& d : decisions) {
      const auto* e = find(enc, d.agent, d.modality);
      pools[d.modality].push_back({e->vars.f, e->vars.u, d.z_train, static_cast<double>(d.z)});
    }
  } else {
    if (hooks && hooks->before_transmit) hooks->before_transmit(store, out.decisions);
    const auto rx = comms::request_features(out.decisions, store, model.config.dim);
    out.comm.feature_bytes = rx.bytes;
    for (const auto& pkt : rx.received) {
      const Var f = tape.constant(std::vector<double>(pkt.f.begin(), pkt.f.end()));
      const Var u = tape.constant(std::vector<double>(pkt.u.begin(), pkt.u.end()));
      pools[pkt.modality].push_back({f, u, Var{}, 1.0});
    }
  }
  if (model.config.meter_requests && tr.select) out.comm.request_bytes = comms::request_bytes(offers.size());
  out.comm.total_bytes = out.comm.meta_bytes + out.comm.feature_bytes + out.comm.request_bytes;

  const auto weighting = tr.bayes ? fusion::Weighting::Precision : fusion::Weighting::Uniform;
  std::vector<std::optional<Var>> aggregates;
  aggregates.reserve(n_mod);
  for (std::size_t m = 0; m < n_mod; ++m) {
    aggregates.push_back(fusion::aggregate_modality(tape, pools[m], model.config.eps, weighting));
  }
  const Var fused = fusion::fuse(bind, model.fusion, aggregates);
  out.logit = fusion::predict(bind, model.fusion, fused);
  return out;
}

}  // namespace cofuse::training
