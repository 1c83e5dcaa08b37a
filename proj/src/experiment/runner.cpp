#include "cofuse/experiment/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>

namespace cofuse::experiment {

Datasets make_datasets(const world::ScenarioConfig& scenario, const training::TrainConfig& train) {
  return {world::generate_frames(scenario, train.train_frames, 0),
          world::generate_frames(scenario, train.test_frames, 1)};
}

std::string describe(const Cell& cell) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "variant=%s seed=%llu p=%.4f", std::string(training::to_string(cell.variant)).c_str(),
                static_cast<unsigned long long>(cell.seed), cell.p);
  return buf;
}

CellOutcome run_cell(const ExperimentConfig& config, const Cell& cell, const Datasets& data,
                     const EpochLogger& log) {
  const auto t0 = std::chrono::steady_clock::now();
  auto train_cfg = config.train;
  train_cfg.variant = cell.variant;
  auto scenario = config.scenario;
  scenario.corruption_prob = cell.p;
  auto result = training::train_model(scenario, config.model, train_cfg, cell.seed, data.train,
                                      [&](const training::EpochLog& e) {
                                        if (log) log(cell, e);
                                      });
  auto metrics = training::evaluate(result.model, data.test, train_cfg.parallel);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ResultsRow row;
  row.variant = std::string(training::to_string(cell.variant));
  row.seed = cell.seed;
  row.p = cell.p;
  row.adr = metrics.adr.value_or(std::numeric_limits<double>::quiet_NaN());
  row.eir = metrics.eir;
  row.ps_kb = metrics.ps_kb;
  row.epochs = train_cfg.epochs;
  row.wall_seconds = wall;
  return {cell, row, std::move(metrics), std::move(result.model), std::move(result.history)};
}

std::vector<Cell> make_grid(const std::vector<training::Variant>& variants, const std::vector<std::uint64_t>& seeds,
                            const std::vector<double>& ps) {
  std::vector<Cell> cells;
  for (double p : ps) {
    for (auto v : variants) {
      for (auto s : seeds) cells.push_back({v, s, p});
    }
  }
  return cells;
}

GridResult run_grid(const ExperimentConfig& config, const std::vector<Cell>& cells, std::size_t jobs,
                    const GridHooks& hooks) {
  // One dataset pair per distinct corruption probability, built up front.
  std::vector<double> ps;
  for (const auto& c : cells) {
    bool seen = false;
    for (double p : ps) seen = seen || p == c.p;
    if (!seen) ps.push_back(c.p);
  }
  // A p that cannot produce data fails its own cells only.
  std::vector<Datasets> data(ps.size());
  std::vector<std::string> data_errors(ps.size());
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto scenario = config.scenario;
    scenario.corruption_prob = ps[k];
    try {
      data[k] = make_datasets(scenario, config.train);
    } catch (const std::exception& e) {
      data_errors[k] = e.what();
    }
  }
  auto data_for = [&](double p) -> const Datasets& {
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (ps[k] != p) continue;
      if (!data_errors[k].empty()) throw std::runtime_error(data_errors[k]);
      return data[k];
    }
    throw std::logic_error("run_grid: no dataset for p");
  };

  std::vector<std::optional<ResultsRow>> rows(cells.size());
  std::vector<std::optional<training::Metrics>> metrics(cells.size());
  std::vector<std::string> errors(cells.size());
  const int threads = static_cast<int>(std::max<std::size_t>(1, jobs));
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (std::size_t k = 0; k < cells.size(); ++k) {
    try {
      auto out = run_cell(config, cells[k], data_for(cells[k].p), hooks.on_epoch);
      if (hooks.on_cell) hooks.on_cell(out);
      rows[k] = out.row;
      metrics[k] = std::move(out.metrics);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    } catch (...) {
      errors[k] = "unknown error";
    }
  }

  GridResult result;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (rows[k]) {
      result.rows.push_back(*rows[k]);
      result.metrics.push_back(std::move(*metrics[k]));
    } else {
      result.failures.push_back({cells[k], errors[k]});
    }
  }
  return result;
}

std::vector<VariantSummary> summarize(const std::vector<ResultsRow>& rows) {
  bool multi_p = false;
  for (const auto& r : rows) multi_p = multi_p || r.p != rows.front().p;
  auto key = [&](const ResultsRow& r) { return multi_p ? r.variant + "@p=" + format_value(r.p) : r.variant; };

  std::vector<std::string> keys;
  for (const auto& r : rows) {
    bool seen = false;
    for (const auto& k : keys) seen = seen || k == key(r);
    if (!seen) keys.push_back(key(r));
  }
  std::vector<VariantSummary> out;
  for (const auto& k : keys) {
    std::vector<double> adr, eir, ps;
    for (const auto& r : rows) {
      if (key(r) != k) continue;
      if (!std::isnan(r.adr)) adr.push_back(r.adr);
      eir.push_back(r.eir);
      ps.push_back(r.ps_kb);
    }
    VariantSummary s;
    s.variant = k;
    s.runs = eir.size();
    s.adr = adr.empty() ? training::MeanStd{std::nan(""), 0.0} : training::mean_std(adr);
    s.eir = training::mean_std(eir);
    s.ps_kb = training::mean_std(ps);
    out.push_back(s);
  }
  return out;
}

OrderingCheck ablation_ordering(const std::vector<VariantSummary>& summary) {
  const char* order[] = {"full", "no_select", "no_bayes", "neither"};
  OrderingCheck check;
  std::vector<double> means;
  for (const char* v : order) {
    const VariantSummary* found = nullptr;
    for (const auto& s : summary) {
      if (s.variant == v) found = &s;
    }
    if (!found) {
      check.holds = false;
      check.detail = std::string("missing variant ") + v;
      return check;
    }
    means.push_back(found->adr.mean);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    if (k) check.detail += means[k - 1] >= means[k] ? " >= " : " < ";
    check.detail += std::string(order[k]) + " " + format_value(means[k]);
    if (k && !(means[k - 1] >= means[k])) check.holds = false;
  }
  return check;
}

}  // namespace cofuse::experiment
