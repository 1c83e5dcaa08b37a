#include "cofuse/training/kernels.hpp"

#include <cmath>
#include <string>

namespace cofuse::training {

namespace {

struct FrameGrad {
  core::Gradients grads;
  LossBreakdown loss;
};

FrameGrad frame_gradient(const Model& model, std::span<const core::Tensor* const> params,
                         const world::Frame& frame, std::uint64_t seed, double lambda, double reg_floor) {
  FrameGrad out{core::zeros_like(params), {}};
  Tape tape;
  ParamBinder bind(tape, params, &out.grads);
  auto noise = core::make_rng({seed});
  const auto fwd = forward_frame(bind, model, frame, Mode::Train, &noise);
  const auto lv = loss(tape, fwd.logit, frame.label, fwd.u_list, lambda, reg_floor);
  out.loss = values(tape, lv);
  if (!std::isfinite(out.loss.total)) {
    throw TrainingError("non-finite loss (task=" + std::to_string(out.loss.task) +
                        ", reg=" + std::to_string(out.loss.reg) + ") at frame " + std::to_string(frame.index));
  }
  tape.backward(lv.total);
  return out;
}

BatchGradients reduce(std::span<const core::Tensor* const> params, std::vector<FrameGrad>& per_frame) {
  BatchGradients out{core::zeros_like(params), {}};
  for (const auto& fg : per_frame) {
    for (std::size_t k = 0; k < out.grads.size(); ++k) {
      auto& dst = out.grads[k];
      const auto& src = fg.grads[k];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    out.loss.task += fg.loss.task;
    out.loss.reg += fg.loss.reg;
    out.loss.total += fg.loss.total;
  }
  const double inv = 1.0 / static_cast<double>(per_frame.size());
  for (auto& g : out.grads)
    for (auto& v : g) v *= inv;
  out.loss.task *= inv;
  out.loss.reg *= inv;
  out.loss.total *= inv;
  return out;
}

void check_batch(std::span<const world::Frame* const> batch, std::span<const std::uint64_t> seeds) {
  if (batch.empty()) throw std::invalid_argument("batch gradients: empty batch");
  if (batch.size() != seeds.size()) throw std::invalid_argument("batch gradients: one noise seed per frame required");
}

FrameEval frame_eval(const Model& model, std::span<const core::Tensor* const> params, const world::Frame& frame) {
  Tape tape;
  ParamBinder bind(tape, params);
  const auto fwd = forward_frame(bind, model, frame, Mode::Eval, nullptr);
  FrameEval ev;
  ev.label = frame.label;
  ev.logit = tape.item(fwd.logit);
  ev.pred = ev.logit > 0.0 ? 1 : 0;
  ev.comm = fwd.comm;
  ev.tokens = fwd.tokens;
  return ev;
}

}  // namespace

BatchGradients batch_gradients_serial(const Model& model, std::span<const world::Frame* const> batch,
                                      std::span<const std::uint64_t> noise_seeds, double lambda,
                                      double reg_floor) {
  check_batch(batch, noise_seeds);
  const auto params = model.parameters();
  std::vector<FrameGrad> per_frame;
  per_frame.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    per_frame.push_back(frame_gradient(model, params, *batch[k], noise_seeds[k], lambda, reg_floor));
  }
  return reduce(params, per_frame);
}

BatchGradients batch_gradients_parallel(const Model& model, std::span<const world::Frame* const> batch,
                                        std::span<const std::uint64_t> noise_seeds, double lambda,
                                      double reg_floor) {
  check_batch(batch, noise_seeds);
  const auto params = model.parameters();
  std::vector<FrameGrad> per_frame(batch.size());
  std::vector<std::string> errors(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      per_frame[k] = frame_gradient(model, params, *batch[k], noise_seeds[k], lambda, reg_floor);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw TrainingError(e);
  }
  return reduce(params, per_frame);
}

std::vector<FrameEval> evaluate_frames_serial(const Model& model, std::span<const world::Frame> frames) {
  const auto params = model.parameters();
  std::vector<FrameEval> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(frame_eval(model, params, f));
  return out;
}

std::vector<FrameEval> evaluate_frames_parallel(const Model& model, std::span<const world::Frame> frames) {
  const auto params = model.parameters();
  std::vector<FrameEval> out(frames.size());
  std::vector<std::string> errors(frames.size());
  const auto n = static_cast<std::ptrdiff_t>(frames.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      out[k] = frame_eval(model, params, frames[k]);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error(e);
  }
  return out;
}

}  // namespace cofuse::training
