#include "cofuse/world/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cofuse::world {

const Observation* Frame::find(std::size_t agent, std::size_t modality) const {
  for (const auto& o : observations) {
    if (o.agent == agent && o.modality == modality) return &o;
  }
  return nullptr;
}

SensorModel::SensorModel(const ScenarioConfig& config) {
  config.validate();
  auto rng = core::make_rng({config.seed, 0x5e75u});
  for (const auto& ch : config.channels) {
    Map map;
    map.kind = ch.kind;
    map.subspace = ch.kind == ChannelKind::Image ? std::array<std::size_t, 4>{0, 1, 4, 5}
                                                 : std::array<std::size_t, 4>{2, 3, 6, 7};
    map.rows = ch.obs_dim;
    const double gain = ch.kind == ChannelKind::Image ? 1.5 : 2.0;
    map.weights.resize(map.rows * 4);
    for (auto& w : map.weights) w = gain * 0.5 * core::standard_normal(rng);
    // Keeps the clean manifold away from the origin, so a blacked-out
    // reading is not also a plausible clean one.
    map.offset.resize(map.rows);
    for (auto& c : map.offset) c = config.sensor_offset * core::standard_normal(rng);
    maps_.push_back(std::move(map));
  }
}

std::vector<double> SensorModel::project(std::size_t modality, std::span<const double> y) const {
  if (modality >= maps_.size()) throw std::out_of_range("sensor: unknown modality " + std::to_string(modality));
  if (y.size() != kLatentDim) {
    throw std::invalid_argument("sensor: latent has " + std::to_string(y.size()) + " entries, expected " +
                                std::to_string(kLatentDim));
  }
  const Map& map = maps_[modality];
  std::vector<double> out(map.rows, 0.0);
  for (std::size_t r = 0; r < map.rows; ++r) {
    double s = map.offset[r];
    for (std::size_t k = 0; k < 4; ++k) s += map.weights[r * 4 + k] * y[map.subspace[k]];
    out[r] = map.kind == ChannelKind::Image ? std::tanh(s) : s;
  }
  return out;
}

int hazard_label(std::span<const double> y, double horizon, double radius) {
  if (y.size() != kLatentDim) {
    throw std::invalid_argument("hazard_label: latent has " + std::to_string(y.size()) + " entries, expected " +
                                std::to_string(kLatentDim));
  }
  const double dx = (y[0] + horizon * y[2]) - (y[4] + horizon * y[6]);
  const double dy = (y[1] + horizon * y[3]) - (y[5] + horizon * y[7]);
  return std::hypot(dx, dy) < radius ? 1 : 0;
}

Observation apply_corruption(Observation obs, Corruption kind, double gaussian_sigma, core::Rng& rng) {
  auto& x = obs.x;
  switch (kind) {
    case Corruption::None:
      return obs;
    case Corruption::Gaussian:
      for (auto& v : x) v += gaussian_sigma * core::standard_normal(rng);
      break;
    case Corruption::Blur: {
      const std::vector<double> src = x;
      const std::size_t n = src.size();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = std::min(i + 1, n - 1);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += src[j];
        x[i] = s / static_cast<double>(hi - lo + 1);
      }
      break;
    }
    case Corruption::Blackout:
      std::fill(x.begin(), x.end(), 0.0);
      break;
    case Corruption::Drop: {
      std::vector<std::size_t> idx(x.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t k = 0; k < x.size() / 2; ++k) x[idx[k]] = 0.0;
      break;
    }
  }
  obs.corruption_applied = kind;
  return obs;
}

namespace {

Corruption draw_kind(const ChannelSpec& ch, core::Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, ch.corruption_kinds.size() - 1);
  return ch.corruption_kinds[pick(rng)];
}

}  // namespace

Observation inject_corruption(const ScenarioConfig& config, Observation obs, core::Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (!(u < config.corruption_prob)) return obs;
  const auto kind = draw_kind(config.channels.at(obs.modality), rng);
  return apply_corruption(std::move(obs), kind, config.noise_scales.gaussian, rng);
}

Observation observe_clean(const ScenarioConfig& config, const SensorModel& sensors, std::span<const double> y,
                          std::size_t agent, std::size_t modality, core::Rng& rng) {
  if (!config.carries(agent, modality)) {
    throw std::invalid_argument("observe: agent " + std::to_string(agent) + " does not carry modality " +
                                std::to_string(modality));
  }
  Observation obs;
  obs.agent = agent;
  obs.modality = modality;
  obs.x = sensors.project(modality, y);
  for (auto& v : obs.x) v += config.sigma_base * core::standard_normal(rng);
  return obs;
}

Observation observe(const ScenarioConfig& config, const SensorModel& sensors, std::span<const double> y,
                    std::size_t agent, std::size_t modality, core::Rng& rng) {
  return inject_corruption(config, observe_clean(config, sensors, y, agent, modality, rng), rng);
}

std::vector<Frame> generate_episode(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const SensorModel sensors(config);
  auto rng = core::make_rng({seed, 0xe915u});
  const std::array<double, kLatentDim> scale{config.position_scale, config.position_scale, config.velocity_scale,
                                             config.velocity_scale, config.position_scale, config.position_scale,
                                             config.velocity_scale, config.velocity_scale};
  const double a = config.latent_persistence;
  const double innovation = std::sqrt(1.0 - a * a);

  WorldState state;
  state.y.resize(kLatentDim);
  for (std::size_t k = 0; k < kLatentDim; ++k) state.y[k] = scale[k] * core::standard_normal(rng);
  std::uniform_real_distribution<double> place(0.0, config.arena_size);
  state.positions.resize(config.n_agents());
  state.positions[0] = {config.arena_size / 2, config.arena_size / 2};
  for (std::size_t i = 1; i < config.n_agents(); ++i) state.positions[i] = {place(rng), place(rng)};

  std::vector<Frame> frames;
  frames.reserve(config.frames_per_episode);
  for (std::size_t t = 0; t < config.frames_per_episode; ++t) {
    state.frame = t;
    Frame frame;
    frame.index = t;
    frame.label = hazard_label(state.y, config.hazard_horizon, config.hazard_radius);
    for (std::size_t i = 1; i < config.n_agents(); ++i) {
      const double d = std::hypot(state.positions[i][0] - state.positions[0][0],
                                  state.positions[i][1] - state.positions[0][1]);
      if (d < config.comm_range) frame.neighbor_set.push_back(i);
    }
    const bool frame_corrupt =
        config.frame_level_corruption && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.corruption_prob;
    for (std::size_t i = 0; i < config.n_agents(); ++i) {
      for (std::size_t m : config.modalities_of(i)) {
        if (config.frame_level_corruption) {
          auto obs = observe_clean(config, sensors, state.y, i, m, rng);
          if (frame_corrupt) {
            const auto kind = draw_kind(config.channels[m], rng);
            obs = apply_corruption(std::move(obs), kind, config.noise_scales.gaussian, rng);
          }
          frame.observations.push_back(std::move(obs));
        } else {
          frame.observations.push_back(observe(config, sensors, state.y, i, m, rng));
        }
      }
    }
    frames.push_back(std::move(frame));

    for (std::size_t k = 0; k < kLatentDim; ++k) {
      state.y[k] = a * state.y[k] + innovation * scale[k] * core::standard_normal(rng);
    }
    for (auto& p : state.positions) {
      for (auto& c : p) {
        c += config.agent_step * core::standard_normal(rng);
        if (c < 0.0) c = -c;
        if (c > config.arena_size) c = 2 * config.arena_size - c;
        c = std::clamp(c, 0.0, config.arena_size);
      }
    }
  }
  return frames;
}

std::vector<Frame> generate_frames(const ScenarioConfig& config, std::size_t n_frames, std::uint64_t stream) {
  config.validate();
  const std::size_t per = config.frames_per_episode;
  const std::size_t n_episodes = (n_frames + per - 1) / per;
  std::vector<std::vector<Frame>> episodes(n_episodes);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t e = 0; e < n_episodes; ++e) {
    auto seeder = core::make_rng({config.seed, stream, e});
    episodes[e] = generate_episode(config, seeder());
  }
  std::vector<Frame> frames;
  frames.reserve(n_frames);
  for (auto& ep : episodes) {
    for (auto& f : ep) {
      if (frames.size() == n_frames) break;
      frames.push_back(std::move(f));
    }
  }
  return frames;
}

}  // namespace cofuse::world
