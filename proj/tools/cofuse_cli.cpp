#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cofuse/experiment/config.hpp"
#include "cofuse/experiment/runner.hpp"
#include "cofuse/experiment/selftest.hpp"
#include "cofuse/training/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace cofuse;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// COFUSE_LOG=quiet|info|debug, default info.
enum class Level { Quiet, Info, Debug };

Level log_level() {
  const char* env = std::getenv("COFUSE_LOG");
  if (!env) return Level::Info;
  const std::string v = env;
  if (v == "quiet" || v == "0") return Level::Quiet;
  if (v == "debug" || v == "2") return Level::Debug;
  return Level::Info;
}

void log(Level at, const std::string& msg) {
  if (log_level() >= at) std::cerr << msg << '\n';
}

struct Options {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::string p;
  std::string variant;
  std::string variants;
  std::optional<std::size_t> epochs;
  std::string out;
  std::size_t jobs = 1;
  std::string checkpoint;
  bool compare_blind = false;
};

template <class T>
std::vector<T> split_list(const std::string& text, const char* what, auto&& parse) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse(item));
    } catch (const std::exception& e) {
      throw UsageError(std::string("bad ") + what + " '" + item + "': " + e.what());
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  return split_list<std::uint64_t>(s, "seed", [](const std::string& x) {
    std::size_t used = 0;
    const auto v = std::stoull(x, &used);
    if (used != x.size()) throw std::invalid_argument("not an integer");
    return static_cast<std::uint64_t>(v);
  });
}

std::vector<double> parse_ps(const std::string& s) {
  return split_list<double>(s, "corruption probability", [](const std::string& x) {
    std::size_t used = 0;
    const double v = std::stod(x, &used);
    if (used != x.size() || !(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("must be a number in [0,1]");
    return v;
  });
}

std::vector<training::Variant> parse_variants(const std::string& s) {
  return split_list<training::Variant>(s, "variant", [](const std::string& x) { return training::parse_variant(x); });
}

experiment::ExperimentConfig resolve_config_unchecked(const Options& o) {
  experiment::ExperimentConfig cfg;
  if (!o.config.empty()) cfg = experiment::load_config(o.config);
  if (!o.preset.empty()) {
    if (!o.config.empty()) throw UsageError("--preset and --config are mutually exclusive");
    cfg.scenario = experiment::scenario_preset(o.preset);
  }
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (!o.variant.empty()) cfg.train.variant = training::parse_variant(o.variant);
  if (!o.seeds.empty()) cfg.train.seeds = parse_seeds(o.seeds);
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

experiment::ExperimentConfig resolve_config(const Options& o) {
  try {
    return resolve_config_unchecked(o);
  } catch (const experiment::ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void prepare_output(const experiment::ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + cfg.output_dir.string() + "': " + ec.message());
  std::ofstream out(cfg.output_dir / "config.json");
  if (!out) throw std::runtime_error("cannot write '" + (cfg.output_dir / "config.json").string() + "'");
  out << experiment::serialize_config(cfg);
}

void emit(const experiment::ExperimentConfig& cfg, const std::vector<experiment::ResultsRow>& rows) {
  if (cfg.emit.csv) {
    experiment::emit_csv(cfg.output_dir / "results.csv", rows);
    log(Level::Info, "wrote " + (cfg.output_dir / "results.csv").string());
  }
  if (cfg.emit.json) {
    experiment::emit_json(cfg.output_dir / "results.json", rows);
    log(Level::Info, "wrote " + (cfg.output_dir / "results.json").string());
  }
}

std::string epoch_line(const experiment::Cell& cell, const training::EpochLog& e) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "[%s] epoch %zu lr %.3e task %.6f reg %.6f total %.6f",
                experiment::describe(cell).c_str(), e.epoch, e.lr, e.task, e.reg, e.total);
  return buf;
}

std::string row_line(const experiment::ResultsRow& r) {
  return r.variant + " seed " + std::to_string(r.seed) + " p " + experiment::format_value(r.p) + ": adr " +
         experiment::format_value(r.adr) + " eir " + experiment::format_value(r.eir) + " ps_kb " +
         experiment::format_value(r.ps_kb) + " (" + experiment::format_value(r.wall_seconds) + " s)";
}

fs::path checkpoint_path(const experiment::ExperimentConfig& cfg, const experiment::Cell& cell) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "model_%s_s%llu_p%.2f.cfck", std::string(training::to_string(cell.variant)).c_str(),
                static_cast<unsigned long long>(cell.seed), cell.p);
  return cfg.output_dir / buf;
}

int cmd_train(const Options& o) {
  auto cfg = resolve_config(o);
  const double p = o.p.empty() ? cfg.scenario.corruption_prob : parse_ps(o.p).front();
  cfg.scenario.corruption_prob = p;
  const experiment::Cell cell{cfg.train.variant, o.seed.value_or(cfg.train.seeds.front()), p};
  prepare_output(cfg);
  const auto data = experiment::make_datasets(cfg.scenario, cfg.train);
  auto out = experiment::run_cell(cfg, cell, data, [](const experiment::Cell& c, const training::EpochLog& e) {
    log(Level::Info, epoch_line(c, e));
  });
  const fs::path ckpt = o.checkpoint.empty() ? checkpoint_path(cfg, cell) : fs::path(o.checkpoint);
  training::save_checkpoint(ckpt, out.model);
  log(Level::Info, "wrote " + ckpt.string());
  emit(cfg, {out.row});
  std::cout << row_line(out.row) << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  if (o.checkpoint.empty()) throw UsageError("eval requires --checkpoint");
  auto cfg = resolve_config(o);
  const double p = o.p.empty() ? cfg.scenario.corruption_prob : parse_ps(o.p).front();
  cfg.scenario.corruption_prob = p;
  const std::uint64_t seed = o.seed.value_or(cfg.train.seeds.front());
  auto model = training::Model::init(cfg.scenario, cfg.model, cfg.train.variant, seed);
  training::load_checkpoint(fs::path(o.checkpoint), model);
  prepare_output(cfg);
  const auto test = world::generate_frames(cfg.scenario, cfg.train.test_frames, 1);
  const auto m = training::evaluate(model, test, cfg.train.parallel);

  experiment::ResultsRow row;
  row.variant = std::string(training::to_string(cfg.train.variant));
  row.seed = seed;
  row.p = p;
  row.adr = m.adr.value_or(std::nan(""));
  row.eir = m.eir;
  row.ps_kb = m.ps_kb;
  row.epochs = 0;
  emit(cfg, {row});
  {
    std::ofstream comm(cfg.output_dir / "comm.csv");
    if (!comm) throw std::runtime_error("cannot write '" + (cfg.output_dir / "comm.csv").string() + "'");
    comms::write_comm_csv(comm, m.comm);
  }
  for (std::size_t k = 0; k < m.rho.size(); ++k) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "modality %zu: mean rho clean %.4f (%zu obs), corrupted %.4f (%zu obs)", k,
                  m.rho[k].clean_mean, m.rho[k].clean_count, m.rho[k].corrupted_mean, m.rho[k].corrupted_count);
    log(Level::Info, buf);
  }
  std::cout << row_line(row) << " accepted " << m.accepted_pairs << "/" << m.offered_pairs << " pairs\n";
  return 0;
}

void print_summary(const std::vector<experiment::ResultsRow>& rows) {
  std::printf("%-24s %5s %17s %17s %17s\n", "variant", "runs", "adr", "eir", "ps_kb");
  for (const auto& s : experiment::summarize(rows)) {
    auto ms = [](const training::MeanStd& v) {
      return experiment::format_value(v.mean) + " +- " + experiment::format_value(v.std);
    };
    std::printf("%-24s %5zu %17s %17s %17s\n", s.variant.c_str(), s.runs, ms(s.adr).c_str(), ms(s.eir).c_str(),
                ms(s.ps_kb).c_str());
  }
}

int run_grid_command(const experiment::ExperimentConfig& cfg, const std::vector<experiment::Cell>& cells,
                     std::size_t jobs, std::vector<experiment::ResultsRow>& rows) {
  prepare_output(cfg);
  log(Level::Info, "running " + std::to_string(cells.size()) + " cells with " + std::to_string(jobs) + " job(s)");
  experiment::GridHooks hooks;
  hooks.on_epoch = [](const experiment::Cell& c, const training::EpochLog& e) { log(Level::Debug, epoch_line(c, e)); };
  hooks.on_cell = [](const experiment::CellOutcome& out) {
    std::string msg = row_line(out.row);
    if (!out.history.empty()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " final task %.4f", out.history.back().task);
      msg += buf;
    }
#pragma omp critical(cofuse_log)
    log(Level::Info, msg);
  };
  auto grid = experiment::run_grid(cfg, cells, jobs, hooks);
  rows = grid.rows;
  if (!rows.empty()) emit(cfg, rows);
  for (const auto& f : grid.failures) {
    std::cerr << "cell failed [" << experiment::describe(f.cell) << "]: " << f.message << '\n';
  }
  return grid.failures.empty() ? 0 : kExitRuntime;
}

int cmd_sweep(const Options& o) {
  auto cfg = resolve_config(o);
  const auto ps = parse_ps(o.p.empty() ? "0.3,0.5,0.7" : o.p);
  const auto variants = parse_variants(o.variants.empty() ? "full,blind_fusion" : o.variants);
  std::vector<experiment::ResultsRow> rows;
  const int rc = run_grid_command(cfg, experiment::make_grid(variants, cfg.train.seeds, ps), o.jobs, rows);
  if (!rows.empty()) print_summary(rows);
  return rc;
}

int cmd_ablate(const Options& o) {
  auto cfg = resolve_config(o);
  const auto ps = parse_ps(o.p.empty() ? experiment::format_value(cfg.scenario.corruption_prob) : o.p);
  if (ps.size() != 1) throw UsageError("ablate takes a single corruption probability");
  std::vector<training::Variant> variants{training::Variant::Full, training::Variant::NoSelect,
                                          training::Variant::NoBayes, training::Variant::Neither};
  if (o.compare_blind) variants.push_back(training::Variant::BlindFusion);
  std::vector<experiment::ResultsRow> rows;
  const int rc = run_grid_command(cfg, experiment::make_grid(variants, cfg.train.seeds, ps), o.jobs, rows);
  if (rows.empty()) return rc;
  print_summary(rows);
  const auto summary = experiment::summarize(rows);
  const auto check = experiment::ablation_ordering(summary);
  std::printf("ordering full >= no_select >= no_bayes >= neither: %s (%s)\n", check.holds ? "holds" : "violated",
              check.detail.c_str());
  if (o.compare_blind) {
    double neither = std::nan(""), blind = std::nan("");
    for (const auto& s : summary) {
      if (s.variant == "neither") neither = s.adr.mean;
      if (s.variant == "blind_fusion") blind = s.adr.mean;
    }
    std::printf("neither vs blind_fusion mean adr: %s vs %s\n", experiment::format_value(neither).c_str(),
                experiment::format_value(blind).c_str());
  }
  return rc;
}

int cmd_selftest(const Options& o) {
  const auto results = experiment::run_selftest(o.seed.value_or(0));
  bool all = true;
  for (const auto& r : results) {
    std::printf("%s  %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.passed;
  }
  return all ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware collaborative perception: train, evaluate and sweep on a synthetic world"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--preset", o.preset, "scenario preset: default, overtaking, left_turn, red_light");
    sub->add_option("--epochs", o.epochs, "training epochs");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* train = app.add_subcommand("train", "train one variant and write a checkpoint and results row");
  add_common(train);
  train->add_option("--seed", o.seed, "run seed");
  train->add_option("--variant", o.variant, "variant tag");
  train->add_option("--p", o.p, "corruption probability");
  train->add_option("--checkpoint", o.checkpoint, "checkpoint path to write");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval);
  eval->add_option("--seed", o.seed, "seed recorded in the results row");
  eval->add_option("--variant", o.variant, "variant tag the checkpoint is run as");
  eval->add_option("--p", o.p, "corruption probability");
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint to load")->required();

  auto* sweep = app.add_subcommand("sweep", "variants x seeds x corruption probabilities");
  add_common(sweep);
  sweep->add_option("--seeds", o.seeds, "comma-separated run seeds");
  sweep->add_option("--p", o.p, "comma-separated corruption probabilities (default 0.3,0.5,0.7)");
  sweep->add_option("--variants", o.variants, "comma-separated variant tags (default full,blind_fusion)");
  sweep->add_option("--variant", o.variants, "alias of --variants");
  sweep->add_option("--jobs", o.jobs, "grid cells run concurrently")->check(CLI::PositiveNumber);

  auto* ablate = app.add_subcommand("ablate", "full, no_select, no_bayes, neither over seeds");
  add_common(ablate);
  ablate->add_option("--seeds", o.seeds, "comma-separated run seeds");
  ablate->add_option("--p", o.p, "corruption probability");
  ablate->add_option("--jobs", o.jobs, "grid cells run concurrently")->check(CLI::PositiveNumber);
  ablate->add_flag("--compare-blind", o.compare_blind, "also run blind_fusion");

  auto* selftest = app.add_subcommand("selftest", "run the invariant suite");
  selftest->add_option("--seed", o.seed, "seed for random test points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*sweep) return cmd_sweep(o);
    if (*ablate) return cmd_ablate(o);
    if (*selftest) return cmd_selftest(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const experiment::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
