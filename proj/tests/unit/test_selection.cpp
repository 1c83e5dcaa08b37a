#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cofuse/core/grad_check.hpp"
#include "cofuse/selection/policy.hpp"
#include "helpers.hpp"

using namespace cofuse;
using namespace cofuse::core;
using namespace cofuse::selection;

TEST_CASE("zero-weight policy returns its bias") {
  auto rng = make_rng({1});
  auto pol = SelectionPolicy::init(32, rng);
  for (auto* lin : {&pol.hidden, &pol.out}) {
    std::fill(lin->weight.data.begin(), lin->weight.data.end(), 0.0);
    std::fill(lin->bias.data.begin(), lin->bias.data.end(), 0.0);
  }
  Tape t;
  auto params = pol.parameters();
  ParamBinder bind(t, params);
  auto l = policy_logits(bind, pol, t.constant(0.7), t.constant(-1.2));
  CHECK(t.value(l)[0] == 0.0);
  CHECK(t.value(l)[1] == 0.0);
}

TEST_CASE("policy logits are deterministic and differentiable in both tokens") {
  auto rng = make_rng({2});
  auto pol = SelectionPolicy::init(32, rng);
  auto params = pol.parameters();
  auto logits_at = [&](double a, double b) {
    Tape t;
    ParamBinder bind(t, params);
    auto l = policy_logits(bind, pol, t.constant(a), t.constant(b));
    return testing::to_vec(t.value(l));
  };
  CHECK(logits_at(0.3, 1.1) == logits_at(0.3, 1.1));
  Tensor rhos = Tensor::vector({0.4, -0.9});
  const MultiScalarFn f = [&](Tape& t, std::span<const Var> v) {
    ParamBinder bind(t, params);
    return t.pick(policy_logits(bind, pol, t.pick(v[0], 0), t.pick(v[0], 1)), 1);
  };
  CHECK(grad_check(f, std::span<const Tensor>(&rhos, 1), 1e-5).max_rel_error < 1e-4);
}

TEST_CASE("gumbel noise examples") {
  CHECK(gumbel_from_uniform(std::exp(-1.0)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gumbel_from_uniform(0.5) == doctest::Approx(-std::log(std::log(2.0))));
  CHECK(gumbel_from_uniform(0.5) == doctest::Approx(0.36651).epsilon(1e-4));
  auto rng = make_rng({3});
  double s = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double g = gumbel_noise(rng);
    REQUIRE(std::isfinite(g));
    s += g;
  }
  CHECK(std::abs(s / n - std::numbers::egamma) < 0.01);
}

TEST_CASE("soft_select examples") {
  Tape t;
  auto l0 = t.constant(std::vector<double>{0, 0});
  CHECK(t.item(soft_select(t, l0, {0, 0}, 1.0)) == 0.5);
  auto l1 = t.constant(std::vector<double>{0, std::log(3.0)});
  CHECK(t.item(soft_select(t, l1, {0, 0}, 1.0)) == doctest::Approx(0.75).epsilon(1e-14));
  auto l2 = t.constant(std::vector<double>{0, 1});
  CHECK(t.item(soft_select(t, l2, {0, 0}, 0.01)) > 0.99);
  CHECK_THROWS_AS(soft_select(t, l2, {0, 0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(soft_select(t, l2, {0, 0}, -1.0), std::invalid_argument);
}

TEST_CASE("hard_select examples and ties") {
  const std::array<double, 2> rej{5, 0}, acc{0, 5}, tie{1, 1};
  CHECK(hard_select(rej, {0, 0}) == kReject);
  CHECK(hard_select(acc, {0, 0}) == kAccept);
  CHECK(hard_select(tie, {0, 0}) == kReject);
  CHECK(hard_select(tie, {0.2, 0.2}) == kReject);
}

TEST_CASE("Gumbel-max frequency matches softmax") {
  auto rng = make_rng({4});
  const std::array<double, 2> l{0.0, std::log(3.0)};
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += hard_select(l, gumbel_pair(rng));
  CHECK(std::abs(static_cast<double>(hits) / n - 0.75) < 0.01);
}

TEST_CASE("straight-through forward values") {
  Tape t;
  auto p = t.constant(0.6);
  CHECK(t.item(straight_through(t, 1, p)) == 1.0);
  CHECK(t.item(straight_through(t, 0, p)) == 0.0);
}

TEST_CASE("straight-through gradient equals the gradient of p") {
  auto rng = make_rng({5});
  for (int trial = 0; trial < 200; ++trial) {
    const double c = standard_normal(rng);
    Tensor logits = testing::random_tensor({2}, rng, -3, 3);
    const auto g = gumbel_pair(rng);
    const double temp = 0.5 + std::abs(standard_normal(rng));

    std::vector<double> via_z(2, 0.0), via_p(2, 0.0);
    double zval = 0.0;
    {
      Tape t;
      auto l = t.leaf(logits, via_z);
      auto p = soft_select(t, l, g, temp);
      auto z = straight_through(t, hard_select(logits.data, g), p);
      zval = t.item(z);
      t.backward(t.scalar_mul(z, c));
    }
    {
      Tape t;
      auto l = t.leaf(logits, via_p);
      t.backward(t.scalar_mul(soft_select(t, l, g, temp), c));
    }
    CHECK((zval == 0.0 || zval == 1.0));
    // Symbolic: dp/dl1 = p(1-p)/T, dp/dl0 = -p(1-p)/T.
    const double a = (logits.data[1] + g[1]) / temp, b = (logits.data[0] + g[0]) / temp;
    const double p = 1.0 / (1.0 + std::exp(b - a));
    CHECK(std::abs(via_z[1] - c * p * (1 - p) / temp) < 1e-12);
    CHECK(std::abs(via_z[0] + c * p * (1 - p) / temp) < 1e-12);
    CHECK(via_z == via_p);
  }
}

TEST_CASE("decision matrix lookup and counts") {
  DecisionMatrix dm;
  dm.entries.resize(3);
  dm.entries[0].agent = 1;
  dm.entries[0].modality = 0;
  dm.entries[0].z = kAccept;
  dm.entries[1].agent = 1;
  dm.entries[1].modality = 1;
  dm.entries[1].z = kReject;
  dm.entries[2].agent = 2;
  dm.entries[2].modality = 0;
  dm.entries[2].z = kAccept;
  CHECK(dm.accepted() == 2);
  REQUIRE(dm.find(1, 1) != nullptr);
  CHECK(dm.find(1, 1)->z == kReject);
  CHECK(dm.find(3, 0) == nullptr);
}
