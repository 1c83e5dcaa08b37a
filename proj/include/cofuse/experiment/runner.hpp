#pragma once

#include <functional>
#include <optional>
#include <map>
#include <string>
#include <vector>

#include "cofuse/experiment/config.hpp"
#include "cofuse/experiment/results.hpp"
#include "cofuse/training/metrics.hpp"

namespace cofuse::experiment {

struct Datasets {
  std::vector<world::Frame> train;
  std::vector<world::Frame> test;
};

// Train and test frames come from independent streams of the scenario seed, so
// every variant and run seed sees the same episodes.
Datasets make_datasets(const world::ScenarioConfig& scenario, const training::TrainConfig& train);

struct Cell {
  training::Variant variant = training::Variant::Full;
  std::uint64_t seed = 0;
  double p = 0.3;
};

std::string describe(const Cell& cell);

struct CellOutcome {
  Cell cell;
  ResultsRow row;
  training::Metrics metrics;
  training::Model model;
  std::vector<training::EpochLog> history;
};

using EpochLogger = std::function<void(const Cell&, const training::EpochLog&)>;

// Trains cell.variant from cell.seed on data.train and evaluates on data.test.
// The scenario's corruption probability must already equal cell.p.
CellOutcome run_cell(const ExperimentConfig& config, const Cell& cell, const Datasets& data,
                     const EpochLogger& log = {});

std::vector<Cell> make_grid(const std::vector<training::Variant>& variants, const std::vector<std::uint64_t>& seeds,
                            const std::vector<double>& ps);

struct GridFailure {
  Cell cell;
  std::string message;
};

struct GridResult {
  // In grid order; failed cells are missing.
  std::vector<ResultsRow> rows;
  std::vector<training::Metrics> metrics;
  std::vector<GridFailure> failures;
};

struct GridHooks {
  EpochLogger on_epoch;
  // Called once per finished cell, from the thread that ran it.
  std::function<void(const CellOutcome&)> on_cell;
};

// Runs every cell, up to `jobs` at a time. A failing cell is recorded and the
// rest of the grid still runs.
GridResult run_grid(const ExperimentConfig& config, const std::vector<Cell>& cells, std::size_t jobs,
                    const GridHooks& hooks = {});

struct VariantSummary {
  std::string variant;
  std::size_t runs = 0;
  training::MeanStd adr;
  training::MeanStd eir;
  training::MeanStd ps_kb;
};

// Mean and sample std per variant (and per p if more than one), in first-seen
// order.
std::vector<VariantSummary> summarize(const std::vector<ResultsRow>& rows);

struct OrderingCheck {
  bool holds = true;
  std::string detail;
};

// full >= no_select >= no_bayes >= neither on mean ADR.
OrderingCheck ablation_ordering(const std::vector<VariantSummary>& summary);

}  // namespace cofuse::experiment
