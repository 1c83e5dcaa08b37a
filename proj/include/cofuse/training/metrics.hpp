#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cofuse/training/kernels.hpp"

namespace cofuse::training {

struct RhoSeparation {
  double clean_mean = 0.0;
  double corrupted_mean = 0.0;
  std::size_t clean_count = 0;
  std::size_t corrupted_count = 0;
};

struct Metrics {
  // Recall on hazard frames; absent when the set has no hazard frame.
  std::optional<double> adr;
  double eir = 0.0;
  double ps_kb = 0.0;
  std::size_t frames = 0;
  std::size_t positives = 0;
  std::size_t accepted_pairs = 0;
  std::size_t offered_pairs = 0;
  // Indexed by modality; uses the hidden corruption metadata.
  std::vector<RhoSeparation> rho;
  std::vector<comms::FrameCommLog> comm;
};

Metrics compute_metrics(std::span<const int> labels, std::span<const int> preds);
Metrics summarize_frames(std::span<const FrameEval> evals, std::size_t n_modalities);

// Eval-mode metrics of one model over a frame set.
Metrics evaluate(const Model& model, std::span<const world::Frame> frames, bool parallel = true);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation (n - 1); zero for a single value.
MeanStd mean_std(std::span<const double> xs);

struct SeedSummary {
  std::optional<MeanStd> adr;
  MeanStd eir;
  MeanStd ps_kb;
  std::vector<Metrics> per_seed;
};

SeedSummary evaluate_seeds(std::span<const Model> models, std::span<const world::Frame> frames, bool parallel = true);

}  // namespace cofuse::training
