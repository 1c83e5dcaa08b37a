#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cofuse/training/kernels.hpp"
#include "cofuse/training/optimizer.hpp"

namespace cofuse::training {

struct TrainConfig {
  std::size_t batch_size = 32;
  double lr0 = 1e-3;
  double lr_min = 1e-5;
  AdamConfig adam;
  std::size_t epochs = 50;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  double lambda = 1.0;
  double reg_floor = -1.0;
  Variant variant = Variant::Full;
  std::size_t train_frames = 8000;
  std::size_t test_frames = 4000;
  bool parallel = true;

  void validate() const;
};

// lr_min + (lr0 - lr_min)(1 + cos(pi t / total)) / 2 for 0 <= t <= total.
double cosine_lr(double t, std::size_t total_epochs, double lr0, double lr_min);
double cosine_lr(double t, const TrainConfig& config);

// One Adam update on the mean loss of the batch. The Gumbel draws of frame k
// come from a stream keyed by (step_seed, k).
LossBreakdown train_step(Model& model, Adam& optimizer, std::span<const world::Frame* const> batch,
                         std::uint64_t step_seed, double lr, double lambda, bool parallel = true,
                         double reg_floor = kNoRegFloor);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double task = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> history;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Initialises a model from `seed` and trains it for config.epochs epochs over
// `frames`, reshuffled every epoch. Deterministic given its inputs.
TrainResult train_model(const world::ScenarioConfig& scenario, const ModelConfig& model_config,
                        const TrainConfig& config, std::uint64_t seed, std::span<const world::Frame> frames,
                        const EpochCallback& on_epoch = {});

}  // namespace cofuse::training
