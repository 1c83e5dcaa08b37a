#include "cofuse/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace cofuse::training {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("train config: " + msg); };
  if (batch_size == 0) fail("batch_size must be at least 1");
  if (!(lambda >= 0.0)) fail("lambda must be non-negative");
  if (!(lr0 >= 0.0 && lr_min >= 0.0)) fail("learning rates must be non-negative");
  if (epochs == 0) fail("epochs must be positive");
  if (seeds.empty()) fail("at least one seed is required");
  if (train_frames == 0 || test_frames == 0) fail("frame counts must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0)) fail("adam betas must lie in [0,1)");
}

double cosine_lr(double t, std::size_t total_epochs, double lr0, double lr_min) {
  if (total_epochs == 0) throw std::invalid_argument("cosine_lr: total_epochs must be positive");
  if (!(t >= 0.0 && t <= static_cast<double>(total_epochs))) {
    throw std::out_of_range("cosine_lr: epoch " + std::to_string(t) + " outside [0, " +
                            std::to_string(total_epochs) + "]");
  }
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(std::numbers::pi * t / static_cast<double>(total_epochs)));
}

double cosine_lr(double t, const TrainConfig& config) { return cosine_lr(t, config.epochs, config.lr0, config.lr_min); }

LossBreakdown train_step(Model& model, Adam& optimizer, std::span<const world::Frame* const> batch,
                         std::uint64_t step_seed, double lr, double lambda, bool parallel,
                         double reg_floor) {
  std::vector<std::uint64_t> seeds(batch.size());
  auto seeder = core::make_rng({step_seed, 0x57e9u});
  for (auto& s : seeds) s = seeder();
  auto bg = parallel ? batch_gradients_parallel(model, batch, seeds, lambda, reg_floor)
                     : batch_gradients_serial(model, batch, seeds, lambda, reg_floor);
  const auto params = model.parameters();
  optimizer.step(params, bg.grads, lr);
  return bg.loss;
}

TrainResult train_model(const world::ScenarioConfig& scenario, const ModelConfig& model_config,
                        const TrainConfig& config, std::uint64_t seed, std::span<const world::Frame> frames,
                        const EpochCallback& on_epoch) {
  config.validate();
  if (frames.empty()) throw std::invalid_argument("train_model: no training frames");
  TrainResult result{Model::init(scenario, model_config, config.variant, seed), {}};
  Model& model = result.model;
  auto params = model.parameters();
  Adam optimizer(params, config.adam);
  auto shuffle_rng = core::make_rng({seed, 0x5a1eu});

  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const world::Frame*> batch;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lr = cosine_lr(static_cast<double>(epoch), config);
    EpochLog log{epoch, lr, 0.0, 0.0, 0.0};
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&frames[order[i]]);
      auto step_rng = core::make_rng({seed, 0x0123u, step++});
      const auto l = train_step(model, optimizer, batch, step_rng(), lr, config.lambda, config.parallel,
                                  config.reg_floor);
      log.task += l.task;
      log.reg += l.reg;
      log.total += l.total;
      ++n_batches;
    }
    log.task /= static_cast<double>(n_batches);
    log.reg /= static_cast<double>(n_batches);
    log.total /= static_cast<double>(n_batches);
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace cofuse::training
