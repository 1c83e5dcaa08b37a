#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cofuse/training/checkpoint.hpp"
#include "cofuse/training/kernels.hpp"
#include "cofuse/training/metrics.hpp"
#include "cofuse/training/trainer.hpp"

using namespace cofuse;
using namespace cofuse::training;
using core::Tape;
using core::Var;

namespace {

std::vector<std::vector<double>> snapshot(const Model& m) {
  std::vector<std::vector<double>> out;
  for (const auto* p : m.parameters()) out.push_back(p->data);
  return out;
}

std::vector<const world::Frame*> pointers(const std::vector<world::Frame>& frames, std::size_t n) {
  std::vector<const world::Frame*> out;
  for (std::size_t k = 0; k < n && k < frames.size(); ++k) out.push_back(&frames[k]);
  return out;
}

const std::vector<world::Frame>& small_frames() {
  static const auto frames = world::generate_frames(world::ScenarioConfig{}, 64, 0);
  return frames;
}

double eval_logit(const Model& model, const world::Frame& frame) {
  const auto params = model.parameters();
  Tape t;
  core::ParamBinder bind(t, params);
  return t.item(forward_frame(bind, model, frame, Mode::Eval, nullptr).logit);
}

}  // namespace

TEST_CASE("loss examples") {
  Tape t;
  const Var zero = t.constant(0.0);
  auto v = values(t, loss(t, zero, 1, {}, 1.0));
  CHECK(v.task == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(v.reg == 0.0);

  std::vector<Var> us{t.constant(std::vector<double>(4, 0.0)), t.constant(std::vector<double>(3, 0.0))};
  v = values(t, loss(t, t.constant(0.8), 0, us, 1.0));
  CHECK(v.reg == 0.0);
  CHECK(v.total == v.task);

  std::vector<Var> two{t.constant(std::vector<double>{0.0, 1.0}), t.constant(std::vector<double>{-0.5, 0.0})};
  v = values(t, loss(t, zero, 0, two, 1.0));
  CHECK(v.reg == doctest::Approx(0.25).epsilon(1e-15));
  v = values(t, loss(t, zero, 0, two, 2.0));
  CHECK(v.total == doctest::Approx(std::log(2.0) + 0.5).epsilon(1e-15));

  // Floor at -0.4: means become 0.5 and mean(-0.4, 0) = -0.2.
  v = values(t, loss(t, zero, 0, two, 1.0, -0.4));
  CHECK(v.reg == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("BCE in logit form matches the probability form") {
  auto rng = core::make_rng({20});
  for (int trial = 0; trial < 500; ++trial) {
    const double z = 8.0 * (core::uniform_open01(rng) - 0.5);
    const int y = trial % 2;
    Tape t;
    const double task = values(t, loss(t, t.constant(z), y, {}, 1.0)).task;
    const double p = 1.0 / (1.0 + std::exp(-z));
    CHECK(task == doctest::Approx(-(y * std::log(p) + (1 - y) * std::log(1 - p))).epsilon(1e-12));
  }
  Tape t;
  CHECK(std::isfinite(values(t, loss(t, t.constant(800.0), 0, {}, 1.0)).task));
  CHECK(values(t, loss(t, t.constant(-800.0), 0, {}, 1.0)).task == 0.0);
}

TEST_CASE("loss gradient with respect to the logit") {
  for (double z : {-3.0, 0.0, 0.7}) {
    for (int y : {0, 1}) {
      Tape t;
      auto x = core::Tensor::scalar(z);
      x.requires_grad = true;
      const Var zl = t.leaf(x);
      t.backward(loss(t, zl, y, {}, 1.0).total);
      CHECK(x.grad[0] == doctest::Approx(1.0 / (1.0 + std::exp(-z)) - y).epsilon(1e-12));
    }
  }
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 50, 1e-3, 1e-5) == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(cosine_lr(50, 50, 1e-3, 1e-5) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(cosine_lr(25, 50, 1e-3, 1e-5) == doctest::Approx(5.05e-4).epsilon(1e-12));
  CHECK_THROWS(cosine_lr(-1, 50, 1e-3, 1e-5));
  CHECK_THROWS(cosine_lr(51, 50, 1e-3, 1e-5));
  CHECK_THROWS(cosine_lr(0, 0, 1e-3, 1e-5));
  double prev = 1.0;
  for (int t = 0; t <= 50; ++t) {
    const double lr = cosine_lr(t, TrainConfig{});
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("metrics examples") {
  auto m = compute_metrics(std::vector<int>{1, 1, 0, 1}, std::vector<int>{1, 0, 0, 1});
  REQUIRE(m.adr.has_value());
  CHECK(*m.adr == doctest::Approx(2.0 / 3.0));
  CHECK(m.eir == 0.75);

  const std::vector<int> labels{0, 1, 0, 0, 1};
  m = compute_metrics(labels, labels);
  CHECK(*m.adr == 1.0);
  CHECK(m.eir == 1.0);
  m = compute_metrics(labels, std::vector<int>(5, 1));
  CHECK(*m.adr == 1.0);
  CHECK(m.eir == doctest::Approx(0.4));

  CHECK_FALSE(compute_metrics(std::vector<int>{0, 0}, std::vector<int>{1, 0}).adr.has_value());
  CHECK_THROWS(compute_metrics(std::vector<int>{0}, std::vector<int>{0, 1}));
  CHECK_THROWS(compute_metrics(std::vector<int>{}, std::vector<int>{}));

  const auto ms = mean_std(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(ms.mean == 2.0);
  CHECK(ms.std == 1.0);
  CHECK(mean_std(std::vector<double>{4.0}).std == 0.0);
}

TEST_CASE("variant tags") {
  for (auto v : all_variants()) CHECK(parse_variant(to_string(v)) == v);
  CHECK(all_variants().size() == 7);
  CHECK_THROWS_AS(parse_variant("who2com"), std::invalid_argument);
  CHECK_FALSE(traits(Variant::SingleAgent).collaborate);
  CHECK_FALSE(traits(Variant::BlindFusion).select);
  CHECK_FALSE(traits(Variant::BlindFusion).bayes);
}

TEST_CASE("no_select accepts every pair and single_agent offers none") {
  world::ScenarioConfig sc;
  auto base = Model::init(sc, {}, Variant::Full, 2);
  base.policy.out.bias.data = {100.0, 0.0};
  const auto no_select = make_variant(Variant::NoSelect, base);
  const auto single = make_variant(Variant::SingleAgent, base);
  const auto params = no_select.parameters();
  auto rng = core::make_rng({21});
  std::size_t offered = 0;
  for (const auto& f : small_frames()) {
    for (auto mode : {Mode::Train, Mode::Eval}) {
      Tape t;
      core::ParamBinder bind(t, params);
      const auto out = forward_frame(bind, no_select, f, mode, &rng);
      for (const auto& d : out.decisions.entries) CHECK(d.z == selection::kAccept);
      offered += out.decisions.entries.size();
      Tape t2;
      const auto single_params = single.parameters();
      core::ParamBinder bind2(t2, single_params);
      const auto alone = forward_frame(bind2, single, f, mode, &rng);
      CHECK(alone.decisions.entries.empty());
      CHECK(alone.comm.total_bytes == 0);
    }
  }
  CHECK(offered > 0);
}

TEST_CASE("no_bayes aggregates with uniform weights") {
  Tape t;
  std::vector<fusion::ProviderEntry> pool{{t.constant(2.0), t.constant(0.0), Var{}, 1.0},
                                          {t.constant(4.0), t.constant(std::log(3.0)), Var{}, 1.0}};
  const auto w = traits(Variant::NoBayes).bayes ? fusion::Weighting::Precision : fusion::Weighting::Uniform;
  CHECK(t.item(*fusion::aggregate_modality(t, pool, fusion::kDefaultEps, w)) == doctest::Approx(3.0));
  CHECK(traits(Variant::NoBayes).select);
  CHECK_FALSE(traits(Variant::Neither).select);
  CHECK_FALSE(traits(Variant::Neither).bayes);
}

TEST_CASE("agent_level shares one decision across an agent's modalities") {
  world::ScenarioConfig sc;
  sc.corruption_prob = 0.5;
  const auto frames = world::generate_frames(sc, 200, 3);
  auto model = Model::init(sc, {}, Variant::AgentLevel, 3);
  const auto params = model.parameters();
  auto rng = core::make_rng({22});
  std::size_t mixed_agents = 0;
  for (const auto& f : frames) {
    Tape t;
    core::ParamBinder bind(t, params);
    const auto out = forward_frame(bind, model, f, Mode::Train, &rng);
    for (const auto& a : out.decisions.entries) {
      for (const auto& b : out.decisions.entries) {
        if (a.agent != b.agent) continue;
        CHECK(a.z == b.z);
        CHECK(a.p == b.p);
      }
      const auto* o1 = f.find(a.agent, 0);
      const auto* o2 = f.find(a.agent, 1);
      if (o1 && o2 && (o1->corruption_applied == world::Corruption::None) !=
                          (o2->corruption_applied == world::Corruption::None))
        ++mixed_agents;
    }
  }
  CHECK(mixed_agents > 0);
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  world::ScenarioConfig sc;
  const auto model = Model::init(sc, {}, Variant::Full, 4);
  const auto batch = pointers(small_frames(), 32);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t k = 0; k < batch.size(); ++k) seeds.push_back(1000 + k);
  const auto s = batch_gradients_serial(model, batch, seeds, 1.0, -1.0);
  const auto p = batch_gradients_parallel(model, batch, seeds, 1.0, -1.0);
  CHECK(s.grads == p.grads);
  CHECK(s.loss.total == p.loss.total);
  CHECK(s.loss.task == p.loss.task);

  const auto es = evaluate_frames_serial(model, small_frames());
  const auto ep = evaluate_frames_parallel(model, small_frames());
  REQUIRE(es.size() == ep.size());
  for (std::size_t k = 0; k < es.size(); ++k) {
    CHECK(es[k].logit == ep[k].logit);
    CHECK(es[k].pred == ep[k].pred);
    CHECK(es[k].comm.total_bytes == ep[k].comm.total_bytes);
  }
}

TEST_CASE("zero learning rate leaves weights unchanged") {
  world::ScenarioConfig sc;
  auto model = Model::init(sc, {}, Variant::Full, 5);
  const auto before = snapshot(model);
  auto params = model.parameters();
  Adam adam(params);
  train_step(model, adam, pointers(small_frames(), 32), 9, 0.0, 1.0);
  CHECK(snapshot(model) == before);
  CHECK(adam.steps() == 1);
}

TEST_CASE("a training step is deterministic") {
  world::ScenarioConfig sc;
  auto run = [&] {
    auto model = Model::init(sc, {}, Variant::Full, 6);
    auto params = model.parameters();
    Adam adam(params);
    const auto l = train_step(model, adam, pointers(small_frames(), 32), 42, 1e-3, 1.0, true, -1.0);
    return std::make_pair(snapshot(model), l.total);
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  auto model = Model::init(sc, {}, Variant::Full, 6);
  CHECK(snapshot(model) != a.first);
}

TEST_CASE("every parameter group receives gradient") {
  world::ScenarioConfig sc;
  sc.corruption_prob = 0.5;
  const auto frames = world::generate_frames(sc, 32, 4);
  const auto model = Model::init(sc, {}, Variant::Full, 7);
  std::vector<std::uint64_t> seeds(frames.size());
  for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = k;
  const auto g = batch_gradients_serial(model, pointers(frames, frames.size()), seeds, 1.0);
  const auto names = model.parameter_names();
  REQUIRE(names.size() == g.grads.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    double norm = 0.0;
    for (double v : g.grads[k]) norm += v * v;
    INFO(names[k]);
    CHECK(std::isfinite(norm));
    // Missing-modality defaults only move when a modality is absent.
    if (names[k].find("missing") == std::string::npos) CHECK(norm > 0.0);
  }
}

TEST_CASE("non-finite loss names the frame") {
  world::ScenarioConfig sc;
  auto model = Model::init(sc, {}, Variant::Full, 8);
  model.fusion.head3.bias.data[0] = std::numeric_limits<double>::quiet_NaN();
  const auto batch = pointers(small_frames(), 4);
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  try {
    batch_gradients_serial(model, batch, seeds, 1.0);
    FAIL("expected a TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("frame") != std::string::npos);
  }
  CHECK_THROWS_AS(batch_gradients_parallel(model, batch, seeds, 1.0), TrainingError);
}

TEST_CASE("loss falls over 100 steps on a fixed set") {
  world::ScenarioConfig sc;
  TrainConfig tc;
  auto model = Model::init(sc, {}, Variant::Full, 9);
  auto params = model.parameters();
  Adam adam(params);
  const auto& frames = small_frames();
  const auto first = pointers(frames, 32);
  std::vector<const world::Frame*> second;
  for (std::size_t k = 32; k < 64; ++k) second.push_back(&frames[k]);
  double start = 0.0, end = 0.0;
  for (int step = 0; step < 100; ++step) {
    const auto& batch = step % 2 == 0 ? first : second;
    const auto l = train_step(model, adam, batch, step, tc.lr0, tc.lambda, true, tc.reg_floor);
    if (step == 0) start = l.total;
  }
  // Loss of the full set after training, same noise for both halves.
  for (int half = 0; half < 2; ++half) {
    std::vector<std::uint64_t> seeds(32, 0);
    end += 0.5 * batch_gradients_serial(model, half ? second : first, seeds, tc.lambda, tc.reg_floor).loss.total;
  }
  MESSAGE("loss " << start << " -> " << end);
  CHECK(end <= 0.8 * start);
}

TEST_CASE("checkpoints round trip") {
  world::ScenarioConfig sc;
  const auto model = Model::init(sc, {}, Variant::Full, 10);
  std::stringstream ss;
  save_checkpoint(ss, model);
  auto other = Model::init(sc, {}, Variant::Full, 11);
  REQUIRE(snapshot(other) != snapshot(model));
  load_checkpoint(ss, other);
  CHECK(snapshot(other) == snapshot(model));
  CHECK(eval_logit(other, small_frames()[0]) == eval_logit(model, small_frames()[0]));

  std::string bytes = ss.str();
  std::stringstream bad(std::string("XXXX") + bytes.substr(4));
  CHECK_THROWS(load_checkpoint(bad, other));
  std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS(load_checkpoint(truncated, other));
  ModelConfig wide;
  wide.dim = 8;
  auto mismatched = Model::init(sc, wide, Variant::Full, 10);
  std::stringstream again(bytes);
  CHECK_THROWS(load_checkpoint(again, mismatched));
}

TEST_CASE("predictions do not depend on observation order") {
  world::ScenarioConfig sc;
  const auto model = Model::init(sc, {}, Variant::Full, 12);
  for (std::size_t k = 0; k < 20; ++k) {
    auto f = small_frames()[k];
    const double base = eval_logit(model, f);
    std::reverse(f.observations.begin(), f.observations.end());
    CHECK(eval_logit(model, f) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("training runs are reproducible end to end") {
  world::ScenarioConfig sc;
  TrainConfig tc;
  tc.epochs = 2;
  const auto a = train_model(sc, {}, tc, 3, small_frames());
  const auto b = train_model(sc, {}, tc, 3, small_frames());
  CHECK(snapshot(a.model) == snapshot(b.model));
  REQUIRE(a.history.size() == 2);
  CHECK(a.history[1].total == b.history[1].total);
  CHECK(a.history[0].lr == tc.lr0);
  const auto ma = evaluate(a.model, small_frames());
  const auto mb = evaluate(b.model, small_frames(), false);
  CHECK(ma.eir == mb.eir);
  CHECK(ma.ps_kb == mb.ps_kb);
}
