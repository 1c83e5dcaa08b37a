#include "cofuse/training/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cofuse::training {

Metrics compute_metrics(std::span<const int> labels, std::span<const int> preds) {
  if (labels.size() != preds.size()) throw std::invalid_argument("metrics: labels and predictions differ in length");
  if (labels.empty()) throw std::invalid_argument("metrics: no frames");
  Metrics m;
  std::size_t tp = 0, correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      ++m.positives;
      if (preds[i] == 1) ++tp;
    }
    if (labels[i] == preds[i]) ++correct;
  }
  m.frames = labels.size();
  m.eir = static_cast<double>(correct) / static_cast<double>(m.frames);
  if (m.positives > 0) m.adr = static_cast<double>(tp) / static_cast<double>(m.positives);
  return m;
}

Metrics summarize_frames(std::span<const FrameEval> evals, std::size_t n_modalities) {
  std::vector<int> labels, preds;
  labels.reserve(evals.size());
  preds.reserve(evals.size());
  for (const auto& e : evals) {
    labels.push_back(e.label);
    preds.push_back(e.pred);
  }
  Metrics m = compute_metrics(labels, preds);
  m.rho.assign(n_modalities, {});
  std::vector<double> clean_sum(n_modalities, 0.0), bad_sum(n_modalities, 0.0);
  for (const auto& e : evals) {
    m.comm.push_back(e.comm);
    m.accepted_pairs += e.comm.accepted_pairs;
    m.offered_pairs += e.comm.offered_pairs;
    for (const auto& t : e.tokens) {
      auto& r = m.rho.at(t.modality);
      if (t.corruption == world::Corruption::None) {
        clean_sum[t.modality] += t.rho;
        ++r.clean_count;
      } else {
        bad_sum[t.modality] += t.rho;
        ++r.corrupted_count;
      }
    }
  }
  for (std::size_t k = 0; k < n_modalities; ++k) {
    auto& r = m.rho[k];
    if (r.clean_count) r.clean_mean = clean_sum[k] / static_cast<double>(r.clean_count);
    if (r.corrupted_count) r.corrupted_mean = bad_sum[k] / static_cast<double>(r.corrupted_count);
  }
  m.ps_kb = comms::package_size(m.comm);
  return m;
}

Metrics evaluate(const Model& model, std::span<const world::Frame> frames, bool parallel) {
  const auto evals = parallel ? evaluate_frames_parallel(model, frames) : evaluate_frames_serial(model, frames);
  return summarize_frames(evals, model.scenario.n_modalities());
}

MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_std: no values");
  double s = 0.0;
  for (double x : xs) s += x;
  const double mean = s / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

SeedSummary evaluate_seeds(std::span<const Model> models, std::span<const world::Frame> frames, bool parallel) {
  SeedSummary out;
  std::vector<double> adr, eir, ps;
  for (const auto& m : models) {
    out.per_seed.push_back(evaluate(m, frames, parallel));
    const auto& r = out.per_seed.back();
    if (r.adr) adr.push_back(*r.adr);
    eir.push_back(r.eir);
    ps.push_back(r.ps_kb);
  }
  if (!adr.empty()) out.adr = mean_std(adr);
  out.eir = mean_std(eir);
  out.ps_kb = mean_std(ps);
  return out;
}

}  // namespace cofuse::training
