#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cofuse::world {

// Image-like channels see the position subspace through a saturating map;
// range-like channels see the velocity subspace linearly.
enum class ChannelKind { Image, Range };

enum class Corruption { None, Gaussian, Blur, Blackout, Drop };

std::string_view to_string(Corruption c);
Corruption parse_corruption(std::string_view s);
std::string_view to_string(ChannelKind k);
ChannelKind parse_channel_kind(std::string_view s);

struct ChannelSpec {
  std::string name;
  ChannelKind kind = ChannelKind::Image;
  std::size_t obs_dim = 16;
  std::vector<Corruption> corruption_kinds;
};

struct NoiseScales {
  double gaussian = 2.0;
};

// Latent layout: [ego pos(2), ego vel(2), hazard pos(2), hazard vel(2)].
inline constexpr std::size_t kLatentDim = 8;

struct ScenarioConfig {
  std::size_t n_collaborators = 3;
  // Global modality set in its fixed order; index into this is the modality id.
  std::vector<ChannelSpec> channels = default_channels();
  // Modality ids carried by each agent (index 0 is the ego). Empty means
  // every agent carries every modality.
  std::vector<std::vector<std::size_t>> modality_sets;
  double corruption_prob = 0.3;
  NoiseScales noise_scales;
  double sigma_base = 0.1;
  // Scale of the fixed per-row offset of each sensor map.
  double sensor_offset = 0.8;
  double comm_range = 30.0;
  double arena_size = 60.0;
  double agent_step = 2.0;
  std::size_t latent_dim = kLatentDim;
  std::size_t frames_per_episode = 100;
  std::uint64_t seed = 2024;
  bool frame_level_corruption = false;
  double hazard_horizon = 1.0;
  double hazard_radius = 1.0;
  double latent_persistence = 0.9;
  double position_scale = 0.7;
  double velocity_scale = 0.45;

  static std::vector<ChannelSpec> default_channels();

  std::size_t n_agents() const { return n_collaborators + 1; }
  std::size_t n_modalities() const { return channels.size(); }
  std::vector<std::size_t> modalities_of(std::size_t agent) const;
  bool carries(std::size_t agent, std::size_t modality) const;

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

}  // namespace cofuse::world
