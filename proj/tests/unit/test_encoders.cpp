#include <doctest.h>

#include "cofuse/core/grad_check.hpp"
#include "cofuse/encoders/encoder.hpp"
#include "helpers.hpp"

using namespace cofuse;
using namespace cofuse::core;

TEST_CASE("zero-weight heads output their biases") {
  auto rng = make_rng({1});
  auto enc = encoders::GaussianEncoder::init(0, 5, 8, 4, rng);
  for (auto* lin : {&enc.feature_head, &enc.uncertainty_head}) {
    std::fill(lin->weight.data.begin(), lin->weight.data.end(), 0.0);
  }
  enc.feature_head.bias.data = {1, 2, 3, 4};
  enc.uncertainty_head.bias.data = {-1, 0, 1, 2};
  const auto g = encoders::encode_values(enc, std::vector<double>{0.3, 0.1, -0.2, 0.8, 0.0});
  CHECK(g.f == enc.feature_head.bias.data);
  CHECK(g.u == enc.uncertainty_head.bias.data);
  CHECK(g.rho == doctest::Approx(0.5));
}

TEST_CASE("encoding is deterministic and validates dimensions") {
  auto rng = make_rng({2});
  auto enc = encoders::GaussianEncoder::init(1, 6, 64, 16, rng);
  const std::vector<double> x{0.1, 0.2, 0.3, -0.4, 0.5, -0.6};
  const auto a = encoders::encode_values(enc, x);
  const auto b = encoders::encode_values(enc, x);
  CHECK(a.f == b.f);
  CHECK(a.u == b.u);
  CHECK(a.f.size() == 16);
  CHECK_THROWS_AS(encoders::encode_values(enc, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("initialisation follows the fan-in rule") {
  auto rng = make_rng({3});
  auto enc = encoders::GaussianEncoder::init(0, 16, 64, 16, rng);
  const double bound1 = 1.0 / 4.0, bound2 = 1.0 / 8.0;
  for (double w : enc.trunk1.weight.data) CHECK(std::abs(w) <= bound1);
  for (double w : enc.trunk2.weight.data) CHECK(std::abs(w) <= bound2);
  for (double b : enc.trunk1.bias.data) CHECK(b == 0.0);
  CHECK(enc.trunk1.weight.requires_grad);
  CHECK(enc.uncertainty_head.bias.requires_grad);
}

TEST_CASE("pool_uncertainty examples") {
  Tape t;
  CHECK(t.item(encoders::pool_uncertainty(t, t.constant(std::vector<double>{1, 2, 3, 4}))) == 2.5);
  CHECK(t.item(encoders::pool_uncertainty(t, t.constant(std::vector<double>(5, 0.0)))) == 0.0);
  CHECK(t.item(encoders::pool_uncertainty(t, t.constant(std::vector<double>{-7.25}))) == -7.25);
  CHECK_THROWS(encoders::pool_uncertainty(t, t.constant(std::vector<double>{})));
}

TEST_CASE("rho is invariant to permuting u") {
  auto rng = make_rng({4});
  std::vector<double> u(9);
  for (auto& v : u) v = standard_normal(rng);
  Tape t;
  const double a = t.item(encoders::pool_uncertainty(t, t.constant(u)));
  std::reverse(u.begin(), u.end());
  std::swap(u[1], u[5]);
  const double b = t.item(encoders::pool_uncertainty(t, t.constant(u)));
  CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("encoder gradients pass grad_check at random weights") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto rng = make_rng({5, seed});
    auto enc = encoders::GaussianEncoder::init(0, 6, 12, 5, rng);
    for (auto* lin : {&enc.trunk1, &enc.trunk2, &enc.feature_head, &enc.uncertainty_head}) {
      for (auto& b : lin->bias.data) b = 0.3 * standard_normal(rng);
    }
    std::vector<double> x(6);
    for (auto& v : x) v = standard_normal(rng);
    std::vector<Tensor*> params;
    std::vector<std::string> names;
    enc.collect(params, names);
    auto f = [&](ParamBinder& bind) {
      auto g = encoders::encode(bind, enc, x);
      Tape& t = bind.tape();
      return t.add(t.mean_all(g.f), t.mean_all(g.u));
    };
    CHECK(grad_check_params(f, params, 1e-5).max_rel_error < 1e-4);
  }
}
