#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cofuse/world/episode_io.hpp"
#include "cofuse/world/world.hpp"

using namespace cofuse;
using namespace cofuse::world;

namespace {

bool same_frames(const std::vector<Frame>& a, const std::vector<Frame>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].index != b[k].index || a[k].label != b[k].label || a[k].neighbor_set != b[k].neighbor_set) return false;
    if (a[k].observations.size() != b[k].observations.size()) return false;
    for (std::size_t j = 0; j < a[k].observations.size(); ++j) {
      const auto& x = a[k].observations[j];
      const auto& y = b[k].observations[j];
      if (x.agent != y.agent || x.modality != y.modality || x.x != y.x || x.corruption_applied != y.corruption_applied)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("episodes are deterministic under the seed") {
  ScenarioConfig sc;
  sc.frames_per_episode = 50;
  CHECK(same_frames(generate_episode(sc, 7), generate_episode(sc, 7)));
  CHECK_FALSE(same_frames(generate_episode(sc, 7), generate_episode(sc, 8)));
}

TEST_CASE("zero range means no neighbours") {
  ScenarioConfig sc;
  sc.comm_range = 0.0;
  for (const auto& f : generate_episode(sc, 3)) CHECK(f.neighbor_set.empty());
}

TEST_CASE("hazard base rate of the default scenario") {
  ScenarioConfig sc;
  const auto frames = generate_frames(sc, 1000, 0);
  double rate = 0.0;
  for (const auto& f : frames) rate += f.label;
  rate /= static_cast<double>(frames.size());
  CHECK(rate >= 0.2);
  CHECK(rate <= 0.5);
}

TEST_CASE("neighbour sets vary across frames") {
  ScenarioConfig sc;
  const auto frames = generate_episode(sc, 5);
  bool changed = false;
  for (std::size_t k = 1; k < frames.size(); ++k) changed = changed || frames[k].neighbor_set != frames[0].neighbor_set;
  CHECK(changed);
}

TEST_CASE("frames carry exactly one observation per carried modality") {
  ScenarioConfig sc;
  sc.modality_sets = {{0, 1}, {1}, {0}, {0, 1}};
  for (const auto& f : generate_episode(sc, 9)) {
    CHECK(f.observations.size() == 6);
    for (const auto& o : f.observations) {
      CHECK(sc.carries(o.agent, o.modality));
      CHECK(o.x.size() == sc.channels[o.modality].obs_dim);
    }
    CHECK((f.label == 0 || f.label == 1));
  }
}

TEST_CASE("observe without noise reproduces the sensor map") {
  ScenarioConfig sc;
  sc.sigma_base = 0.0;
  sc.corruption_prob = 0.0;
  const SensorModel sensors(sc);
  auto rng = core::make_rng({1});
  const std::vector<double> y{0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8};
  for (std::size_t m = 0; m < 2; ++m) CHECK(observe(sc, sensors, y, 0, m, rng).x == sensors.project(m, y));
}

TEST_CASE("observe rejects a modality the agent lacks") {
  ScenarioConfig sc;
  sc.modality_sets = {{0}, {1}, {0, 1}, {0, 1}};
  const SensorModel sensors(sc);
  auto rng = core::make_rng({1});
  const std::vector<double> y(8, 0.0);
  CHECK_THROWS_AS(observe(sc, sensors, y, 1, 0, rng), std::invalid_argument);
}

TEST_CASE("blackout and forced corruption") {
  ScenarioConfig sc;
  sc.corruption_prob = 1.0;
  sc.channels[0].corruption_kinds = {Corruption::Blackout};
  auto rng = core::make_rng({2});
  Observation obs;
  obs.x = {1.0, -2.0, 3.0};
  auto out = inject_corruption(sc, obs, rng);
  CHECK(out.x == std::vector<double>(3, 0.0));
  CHECK(out.corruption_applied == Corruption::Blackout);
  sc.corruption_prob = 0.0;
  for (int i = 0; i < 100; ++i) CHECK(inject_corruption(sc, obs, rng).x == obs.x);
}

TEST_CASE("blur and drop definitions") {
  auto rng = core::make_rng({3});
  Observation obs;
  obs.x = {3.0, 0.0, 6.0, 3.0};
  auto blurred = apply_corruption(obs, Corruption::Blur, 0.0, rng);
  CHECK(blurred.x[0] == doctest::Approx(1.5));
  CHECK(blurred.x[1] == doctest::Approx(3.0));
  CHECK(blurred.x[2] == doctest::Approx(3.0));
  CHECK(blurred.x[3] == doctest::Approx(4.5));
  obs.x.assign(16, 1.0);
  auto dropped = apply_corruption(obs, Corruption::Drop, 0.0, rng);
  int zeros = 0;
  for (double v : dropped.x) zeros += v == 0.0;
  CHECK(zeros == 8);
}

TEST_CASE("gaussian corruption variance") {
  auto rng = core::make_rng({4});
  Observation obs;
  obs.x = {0.5};
  double s = 0.0, s2 = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double d = apply_corruption(obs, Corruption::Gaussian, 2.0, rng).x[0] - 0.5;
    s += d;
    s2 += d * d;
  }
  const double var = (s2 - s * s / n) / (n - 1);
  CHECK(std::abs(var - 4.0) < 0.2);
}

TEST_CASE("baseline noise covariance matches sigma_base squared") {
  ScenarioConfig sc;
  sc.corruption_prob = 0.0;
  sc.sigma_base = 0.3;
  const SensorModel sensors(sc);
  auto rng = core::make_rng({5});
  const std::vector<double> y{0.2, 0.1, -0.3, 0.0, 0.4, -0.1, 0.2, 0.3};
  const auto clean = sensors.project(1, y);
  const std::size_t d = clean.size();
  std::vector<double> cov(d * d, 0.0), mean(d, 0.0);
  const int n = 10000;
  std::vector<std::vector<double>> eps;
  for (int i = 0; i < n; ++i) {
    auto o = observe(sc, sensors, y, 0, 1, rng);
    std::vector<double> e(d);
    for (std::size_t k = 0; k < d; ++k) e[k] = o.x[k] - clean[k];
    for (std::size_t k = 0; k < d; ++k) mean[k] += e[k] / n;
    eps.push_back(std::move(e));
  }
  for (const auto& e : eps)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov[a * d + b] += (e[a] - mean[a]) * (e[b] - mean[b]) / (n - 1);
  const double target = 0.09;
  for (std::size_t a = 0; a < d; ++a) {
    CHECK(std::abs(cov[a * d + a] - target) < 0.05 * target);
    for (std::size_t b = 0; b < d; ++b) {
      if (a != b) CHECK(std::abs(cov[a * d + b]) < 0.05 * target);
    }
  }
}

TEST_CASE("corruption frequency over many draws") {
  ScenarioConfig sc;
  auto rng = core::make_rng({6});
  Observation obs;
  obs.modality = 0;
  obs.x = std::vector<double>(16, 0.5);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += inject_corruption(sc, obs, rng).corruption_applied != Corruption::None;
  CHECK(std::abs(static_cast<double>(hits) / n - 0.3) < 0.01);
}

TEST_CASE("corruption metadata never reaches the observation vector") {
  // Same rng state, metadata cleared: the model-visible vector is unchanged.
  ScenarioConfig sc;
  const SensorModel sensors(sc);
  auto rng = core::make_rng({7});
  const std::vector<double> y(8, 0.25);
  for (int i = 0; i < 200; ++i) {
    auto obs = observe(sc, sensors, y, 0, i % 2, rng);
    auto hidden = obs;
    hidden.corruption_applied = Corruption::None;
    CHECK(hidden.x == obs.x);
  }
}

TEST_CASE("hazard label examples") {
  CHECK(hazard_label(std::vector<double>{1, 1, 0, 0, 1, 1, 0, 0}) == 1);
  CHECK(hazard_label(std::vector<double>{0, 0, 0, 0, 10, 0, 0, 0}) == 0);
  CHECK(hazard_label(std::vector<double>{0, 0, 0, 0, 1, 0, 0, 0}) == 0);
  CHECK(hazard_label(std::vector<double>{0, 0, 0.5, 0, 0.9, 0, 0, 0}) == 1);
  CHECK_THROWS_AS(hazard_label(std::vector<double>{0, 0, 0}), std::invalid_argument);
}

TEST_CASE("scenario validation") {
  ScenarioConfig sc;
  CHECK_NOTHROW(sc.validate());
  auto bad = sc;
  bad.modality_sets = {{}, {0}, {0}, {0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.modality_sets = {{0, 5}, {0}, {0}, {0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.corruption_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = sc;
  bad.latent_dim = 6;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(parse_corruption("drop") == Corruption::Drop);
  CHECK_THROWS(parse_corruption("smudge"));
}

TEST_CASE("episode records round-trip") {
  ScenarioConfig sc;
  sc.frames_per_episode = 12;
  const auto frames = generate_episode(sc, 21);
  std::stringstream ss;
  write_frames(ss, frames);
  CHECK(same_frames(read_frames(ss), frames));
}

TEST_CASE("episode reader names the bad line") {
  std::stringstream ss("{\"frame\":0,\"label\":1,\"neighbors\":[],\"obs\":[]}\nnot json\n");
  try {
    read_frames(ss);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("frame sets are reproducible per stream") {
  ScenarioConfig sc;
  sc.frames_per_episode = 20;
  const auto a = generate_frames(sc, 130, 0);
  CHECK(a.size() == 130);
  CHECK(same_frames(a, generate_frames(sc, 130, 0)));
  CHECK_FALSE(same_frames(a, generate_frames(sc, 130, 1)));
}
