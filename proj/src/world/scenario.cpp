#include "cofuse/world/scenario.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace cofuse::world {

std::string_view to_string(Corruption c) {
  switch (c) {
    case Corruption::None: return "none";
    case Corruption::Gaussian: return "gaussian";
    case Corruption::Blur: return "blur";
    case Corruption::Blackout: return "blackout";
    case Corruption::Drop: return "drop";
  }
  return "none";
}

Corruption parse_corruption(std::string_view s) {
  if (s == "none") return Corruption::None;
  if (s == "gaussian") return Corruption::Gaussian;
  if (s == "blur") return Corruption::Blur;
  if (s == "blackout") return Corruption::Blackout;
  if (s == "drop") return Corruption::Drop;
  throw std::invalid_argument("unknown corruption kind '" + std::string(s) + "'");
}

std::string_view to_string(ChannelKind k) { return k == ChannelKind::Image ? "image" : "range"; }

ChannelKind parse_channel_kind(std::string_view s) {
  if (s == "image") return ChannelKind::Image;
  if (s == "range") return ChannelKind::Range;
  throw std::invalid_argument("unknown channel kind '" + std::string(s) + "'");
}

std::vector<ChannelSpec> ScenarioConfig::default_channels() {
  return {
      {"R", ChannelKind::Image, 16, {Corruption::Gaussian, Corruption::Blur, Corruption::Blackout}},
      {"L", ChannelKind::Range, 16, {Corruption::Drop, Corruption::Blackout}},
  };
}

std::vector<std::size_t> ScenarioConfig::modalities_of(std::size_t agent) const {
  if (agent >= n_agents()) throw std::out_of_range("agent " + std::to_string(agent) + " out of range");
  if (modality_sets.empty()) {
    std::vector<std::size_t> all(channels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  return modality_sets[agent];
}

bool ScenarioConfig::carries(std::size_t agent, std::size_t modality) const {
  if (agent >= n_agents()) return false;
  if (modality_sets.empty()) return modality < channels.size();
  const auto& set = modality_sets[agent];
  return std::find(set.begin(), set.end(), modality) != set.end();
}

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("scenario: " + msg); };
  if (channels.empty()) fail("at least one modality is required");
  if (channels.size() > 255) fail("at most 255 modalities fit the wire format");
  if (n_agents() > 65535) fail("too many agents for the wire format");
  for (const auto& ch : channels) {
    if (ch.obs_dim == 0) fail("modality '" + ch.name + "' has zero observation dimension");
    if (ch.corruption_kinds.empty()) fail("modality '" + ch.name + "' lists no corruption kinds");
    for (auto k : ch.corruption_kinds) {
      if (k == Corruption::None) fail("'none' is not a corruption kind");
    }
  }
  if (!modality_sets.empty()) {
    if (modality_sets.size() != n_agents()) {
      fail("modality_sets has " + std::to_string(modality_sets.size()) + " entries for " +
           std::to_string(n_agents()) + " agents");
    }
    for (std::size_t i = 0; i < modality_sets.size(); ++i) {
      auto set = modality_sets[i];
      std::sort(set.begin(), set.end());
      if (std::adjacent_find(set.begin(), set.end()) != set.end()) {
        fail("agent " + std::to_string(i) + " lists a modality twice");
      }
      for (auto m : set) {
        if (m >= channels.size()) fail("agent " + std::to_string(i) + " carries unknown modality " + std::to_string(m));
      }
    }
    if (modality_sets[0].empty()) fail("the ego must carry at least one modality");
  }
  if (!(corruption_prob >= 0.0 && corruption_prob <= 1.0)) fail("corruption_prob must lie in [0,1]");
  if (!(sigma_base >= 0.0)) fail("sigma_base must be non-negative");
  if (!(sensor_offset >= 0.0)) fail("sensor_offset must be non-negative");
  if (!(noise_scales.gaussian >= 0.0)) fail("gaussian noise scale must be non-negative");
  if (!(comm_range >= 0.0)) fail("comm_range must be non-negative");
  if (!(arena_size > 0.0)) fail("arena_size must be positive");
  if (latent_dim != kLatentDim) fail("latent_dim must be " + std::to_string(kLatentDim));
  if (frames_per_episode == 0) fail("frames_per_episode must be positive");
  if (!(latent_persistence >= 0.0 && latent_persistence < 1.0)) fail("latent_persistence must lie in [0,1)");
  if (!(hazard_radius > 0.0)) fail("hazard_radius must be positive");
}

}  // namespace cofuse::world
