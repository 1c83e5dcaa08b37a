#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cofuse/core/params.hpp"
#include "cofuse/training/loss.hpp"
#include "cofuse/training/model.hpp"

namespace cofuse::training {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-frame work items. Each frame builds its own tape, so frames are
// independent; the reductions below run in frame order, which makes the
// serial and OpenMP kernels agree bit for bit.

struct BatchGradients {
  core::Gradients grads;  // mean over the batch
  LossBreakdown loss;     // mean over the batch
};

struct FrameEval {
  int label = 0;
  int pred = 0;
  double logit = 0.0;
  comms::FrameCommLog comm;
  std::vector<ObsToken> tokens;
};

// Gradient of the mean total loss. noise_seeds[k] seeds the Gumbel draws of
// batch[k]. Throws TrainingError naming the frame if a loss is not finite.
BatchGradients batch_gradients_serial(const Model& model, std::span<const world::Frame* const> batch,
                                      std::span<const std::uint64_t> noise_seeds, double lambda,
                                      double reg_floor = kNoRegFloor);
BatchGradients batch_gradients_parallel(const Model& model, std::span<const world::Frame* const> batch,
                                        std::span<const std::uint64_t> noise_seeds, double lambda,
                                      double reg_floor = kNoRegFloor);

std::vector<FrameEval> evaluate_frames_serial(const Model& model, std::span<const world::Frame> frames);
std::vector<FrameEval> evaluate_frames_parallel(const Model& model, std::span<const world::Frame> frames);

}  // namespace cofuse::training
