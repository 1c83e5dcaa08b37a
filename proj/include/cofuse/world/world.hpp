#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cofuse/core/random.hpp"
#include "cofuse/world/scenario.hpp"

namespace cofuse::world {

struct WorldState {
  std::vector<double> y;
  std::vector<std::array<double, 2>> positions;
  std::size_t frame = 0;
};

struct Observation {
  std::size_t agent = 0;
  std::size_t modality = 0;
  std::vector<double> x;
  // Evaluation-only metadata; never fed to a model.
  Corruption corruption_applied = Corruption::None;
};

struct Frame {
  std::size_t index = 0;
  int label = 0;
  std::vector<Observation> observations;
  // Collaborator ids within communication range of the ego, ascending.
  std::vector<std::size_t> neighbor_set;

  const Observation* find(std::size_t agent, std::size_t modality) const;
};

// Frozen per-modality maps f_m from the latent state to a clean observation.
class SensorModel {
 public:
  explicit SensorModel(const ScenarioConfig& config);

  std::vector<double> project(std::size_t modality, std::span<const double> y) const;

 private:
  struct Map {
    ChannelKind kind;
    std::array<std::size_t, 4> subspace;
    std::size_t rows;
    std::vector<double> weights;  // rows x 4
    std::vector<double> offset;
  };
  std::vector<Map> maps_;
};

// 1 iff the ego and the hazard, extrapolated by the horizon, come strictly
// closer than the radius.
int hazard_label(std::span<const double> y, double horizon = 1.0, double radius = 1.0);

Observation apply_corruption(Observation obs, Corruption kind, double gaussian_sigma, core::Rng& rng);

// With probability config.corruption_prob, applies a kind drawn uniformly
// from the channel's list.
Observation inject_corruption(const ScenarioConfig& config, Observation obs, core::Rng& rng);

Observation observe_clean(const ScenarioConfig& config, const SensorModel& sensors, std::span<const double> y,
                          std::size_t agent, std::size_t modality, core::Rng& rng);

// Clean observation followed by inject_corruption. Throws if the agent does
// not carry the modality.
Observation observe(const ScenarioConfig& config, const SensorModel& sensors, std::span<const double> y,
                    std::size_t agent, std::size_t modality, core::Rng& rng);

std::vector<Frame> generate_episode(const ScenarioConfig& config, std::uint64_t seed);

// n_frames frames built from whole episodes drawn from an independent stream
// (stream 0 and 1 are used for train and test). Episodes are generated in
// parallel; the result does not depend on the thread count.
std::vector<Frame> generate_frames(const ScenarioConfig& config, std::size_t n_frames, std::uint64_t stream);

}  // namespace cofuse::world
