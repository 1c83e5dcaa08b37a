#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cofuse/comms/protocol.hpp"
#include "cofuse/encoders/encoder.hpp"
#include "cofuse/fusion/fusion.hpp"
#include "cofuse/selection/policy.hpp"
#include "cofuse/world/world.hpp"

namespace cofuse::training {

using core::ParamBinder;
using core::Tape;
using core::Tensor;
using core::Var;

enum class Variant { Full, NoSelect, NoBayes, Neither, SingleAgent, BlindFusion, AgentLevel };

std::string_view to_string(Variant v);
// Throws std::invalid_argument on an unknown tag.
Variant parse_variant(std::string_view tag);
const std::vector<Variant>& all_variants();

struct VariantTraits {
  bool collaborate = true;   // collaborator features reach the ego at all
  bool select = true;        // learned accept/reject gating
  bool bayes = true;         // precision weights; otherwise w = 1
  bool agent_level = false;  // one decision per agent instead of per modality
  bool handshake = true;     // meta-packets exchanged before requests
};
VariantTraits traits(Variant v);

struct ModelConfig {
  std::size_t dim = 16;
  std::size_t hidden = 64;
  std::size_t policy_hidden = 32;
  std::size_t proj_dim = 16;
  std::size_t head_hidden1 = 64;
  std::size_t head_hidden2 = 32;
  double temperature = 1.0;
  // Ego token used when the ego does not carry the modality being offered.
  double sentinel_rho = 6.0;
  double eps = fusion::kDefaultEps;
  bool meter_requests = false;
};

struct Model {
  world::ScenarioConfig scenario;
  ModelConfig config;
  Variant variant = Variant::Full;
  std::vector<encoders::GaussianEncoder> encoders;
  selection::SelectionPolicy policy;
  fusion::FusionLayer fusion;

  static Model init(const world::ScenarioConfig& scenario, const ModelConfig& config, Variant variant,
                    std::uint64_t seed);

  // Fixed order: encoders by modality, policy, fusion. Checkpoints and
  // optimiser state follow this order.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
};

// Same weights, different pipeline wiring.
Model make_variant(Variant v, Model model);

enum class Mode { Train, Eval };

struct ObsToken {
  std::size_t agent = 0;
  std::size_t modality = 0;
  double rho = 0.0;
  world::Corruption corruption = world::Corruption::None;
};

struct FrameOutput {
  Var logit;
  std::vector<Var> u_list;
  selection::DecisionMatrix decisions;
  comms::FrameCommLog comm;
  std::vector<ObsToken> tokens;
};

// Hooks for tests that tamper with sender-side state between encoding and
// transmission (eval mode only).
struct EvalHooks {
  std::function<void(comms::EncodedStore&, const selection::DecisionMatrix&)> before_transmit;
};

// One frame through encode -> select -> aggregate -> fuse -> predict.
// Train mode draws Gumbel noise from `noise` and keeps every offered pair in
// the aggregation through its straight-through mask. Eval mode decides by
// argmax of the raw logits and aggregates only what arrives over the wire.
FrameOutput forward_frame(ParamBinder& bind, const Model& model, const world::Frame& frame, Mode mode,
                          core::Rng* noise, const EvalHooks* hooks = nullptr);

}  // namespace cofuse::training
