// Serial vs OpenMP kernels: batch gradients and test-set evaluation.
#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "cofuse/training/kernels.hpp"
#include "cofuse/world/world.hpp"

using namespace cofuse;

namespace {

template <class F>
double best_ms(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  std::size_t frames = 512, batch = 32;
  int reps = 5, threads = 0;
  app.add_option("--frames", frames, "evaluation frames");
  app.add_option("--batch", batch, "frames per gradient batch");
  app.add_option("--reps", reps, "repetitions; the best time is reported");
  app.add_option("--threads", threads, "OpenMP threads (0: runtime default)");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  world::ScenarioConfig sc;
  const auto data = world::generate_frames(sc, std::max(frames, batch), 0);
  const auto model = training::Model::init(sc, {}, training::Variant::Full, 0);
  std::vector<const world::Frame*> ptrs;
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < batch; ++k) {
    ptrs.push_back(&data[k]);
    seeds.push_back(k);
  }
  const std::vector<world::Frame> eval_set(data.begin(), data.begin() + frames);

  training::BatchGradients gs, gp;
  std::vector<training::FrameEval> es, ep;
  const double t_gs = best_ms(reps, [&] { gs = training::batch_gradients_serial(model, ptrs, seeds, 1.0, -1.0); });
  const double t_gp = best_ms(reps, [&] { gp = training::batch_gradients_parallel(model, ptrs, seeds, 1.0, -1.0); });
  const double t_es = best_ms(reps, [&] { es = training::evaluate_frames_serial(model, eval_set); });
  const double t_ep = best_ms(reps, [&] { ep = training::evaluate_frames_parallel(model, eval_set); });

  bool same_eval = es.size() == ep.size();
  for (std::size_t k = 0; same_eval && k < es.size(); ++k) same_eval = es[k].logit == ep[k].logit;

  std::printf("threads %d\n", omp_get_max_threads());
  std::printf("%-22s %10s %10s %8s %10s\n", "kernel", "serial ms", "omp ms", "speedup", "bitwise");
  std::printf("%-22s %10.2f %10.2f %8.2f %10s\n", "batch gradients", t_gs, t_gp, t_gs / t_gp,
              gs.grads == gp.grads ? "equal" : "DIFFER");
  std::printf("%-22s %10.2f %10.2f %8.2f %10s\n", "evaluation", t_es, t_ep, t_es / t_ep, same_eval ? "equal" : "DIFFER");
  return gs.grads == gp.grads && same_eval ? 0 : 1;
}
