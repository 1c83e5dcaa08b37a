#include "cofuse/experiment/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "cofuse/comms/packets.hpp"
#include "cofuse/core/grad_check.hpp"
#include "cofuse/training/loss.hpp"
#include "cofuse/training/model.hpp"

namespace cofuse::experiment {

namespace {

using core::Tape;
using core::Tensor;
using core::Var;

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Tensor random_tensor(core::Shape s, core::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(s), true);
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data) v = d(rng);
  return t;
}

CheckResult check_ops(core::Rng& rng) {
  using Fn = std::function<Var(Tape&, std::span<const Var>)>;
  struct Case {
    const char* name;
    Fn fn;
    std::vector<core::Shape> shapes;
  };
  const std::vector<Case> cases{
      {"matmul", [](Tape& t, auto v) { return t.sum_all(t.tanh(t.matmul(v[0], v[1]))); }, {{3, 4}, {4, 2}}},
      {"add/sub/mul", [](Tape& t, auto v) { return t.sum_all(t.mul(t.add(v[0], v[1]), t.sub(v[0], v[1]))); },
       {{5}, {5}}},
      {"div", [](Tape& t, auto v) { return t.sum_all(t.div(v[0], t.add_scalar(t.exp(v[1]), 0.5))); }, {{4}, {4}}},
      {"softplus/sigmoid/log",
       [](Tape& t, auto v) { return t.mean_all(t.add(t.softplus(v[0]), t.log(t.sigmoid(v[0])))); }, {{6}}},
      {"softmax/pick", [](Tape& t, auto v) { return t.pick(t.softmax(t.scalar_mul(v[0], 2.0)), 1); }, {{3}}},
      {"concat/mean_axis/scale",
       [](Tape& t, auto v) {
         std::vector<Var> parts{v[0], v[1]};
         return t.sum_all(t.scale(t.mean_axis(t.matmul(v[2], t.neg(v[3])), 0), t.pick(t.concat(parts), 4)));
       },
       {{3}, {3}, {2, 3}, {3, 2}}},
  };
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    std::vector<Tensor> xs;
    for (const auto& s : c.shapes) xs.push_back(random_tensor(s, rng));
    const auto r = core::grad_check(c.fn, xs, 1e-5);
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = c.name;
    }
  }
  return {"autodiff: op gradients", worst < 1e-4, fmt("max rel error %.2e", worst) + " (" + worst_name + ")"};
}

CheckResult check_networks(core::Rng& rng) {
  world::ScenarioConfig sc;
  training::ModelConfig mc;
  mc.hidden = 8;
  mc.policy_hidden = 6;
  mc.head_hidden1 = 8;
  mc.head_hidden2 = 6;
  auto model = training::Model::init(sc, mc, training::Variant::Full, rng());
  for (auto& m : model.fusion.missing) {
    for (auto& v : m.data) v = 0.3;
  }
  auto params = model.parameters();
  std::vector<double> x(sc.channels[0].obs_dim);
  for (auto& v : x) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const auto f = [&](core::ParamBinder& bind) {
    Tape& t = bind.tape();
    auto g = encoders::encode(bind, model.encoders[0], x);
    auto logits = selection::policy_logits(bind, model.policy, g.rho, t.constant(0.5));
    auto p = selection::soft_select(t, logits, {0.1, -0.2}, 1.0);
    std::vector<fusion::ProviderEntry> pool{{g.f, g.u, Var{}, 1.0}};
    std::vector<std::optional<Var>> aggs{fusion::aggregate_modality(t, pool), std::nullopt};
    Var logit = fusion::predict(bind, model.fusion, fusion::fuse(bind, model.fusion, aggs));
    return t.add(t.mul(logit, p), t.mean_all(g.u));
  };
  const auto r = core::grad_check_params(f, params, 1e-5);
  return {"autodiff: encoder, policy, fusion gradients", r.max_rel_error < 1e-4,
          fmt("max rel error %.2e", r.max_rel_error)};
}

CheckResult check_gumbel(core::Rng& rng) {
  const std::array<double, 2> l{0.3, -0.4};
  const double expected = 1.0 / (1.0 + std::exp(l[0] - l[1]));
  const int n = 40000;
  int accepts = 0;
  for (int i = 0; i < n; ++i) accepts += selection::hard_select(l, selection::gumbel_pair(rng));
  const double freq = static_cast<double>(accepts) / n;
  const double se = std::sqrt(expected * (1 - expected) / n);
  return {"selection: Gumbel-max frequency", std::abs(freq - expected) < 5 * se,
          fmt("accept freq %.4f vs softmax %.4f", freq, expected)};
}

CheckResult check_straight_through(core::Rng& rng) {
  double worst = 0.0;
  bool binary = true;
  for (int i = 0; i < 200; ++i) {
    Tape t;
    Tensor logits = random_tensor({2}, rng, -2, 2);
    std::vector<double> grad(2, 0.0);
    const Var l = t.leaf(logits, grad);
    const auto g = selection::gumbel_pair(rng);
    const Var p = selection::soft_select(t, l, g, 1.0);
    const double pv = t.item(p);
    const Var z = selection::straight_through(t, selection::hard_select(logits.data, g), p);
    binary = binary && (t.item(z) == 0.0 || t.item(z) == 1.0);
    t.backward(z);
    // d softmax[1] / d l = p(1-p) (-1, +1)
    worst = std::max({worst, std::abs(grad[1] - pv * (1 - pv)), std::abs(grad[0] + pv * (1 - pv))});
  }
  return {"selection: straight-through surrogate", binary && worst < 1e-12,
          fmt("binary forward %.0f, max grad error %.2e", binary ? 1.0 : 0.0, worst)};
}

CheckResult check_fusion(core::Rng& rng) {
  std::uniform_real_distribution<double> d(-2, 2);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double f1 = d(rng), f2 = d(rng), u1 = d(rng), u2 = d(rng);
    Tape t;
    std::vector<fusion::ProviderEntry> pool{{t.constant(f1), t.constant(u1), Var{}, 1.0},
                                            {t.constant(f2), t.constant(u2), Var{}, 1.0}};
    const double got = t.item(*fusion::aggregate_modality(t, pool, 0.0));
    const double w1 = 1.0 / std::exp(u1), w2 = 1.0 / std::exp(u2);
    worst = std::max(worst, std::abs(got - (w1 * f1 + w2 * f2) / (w1 + w2)));
  }
  Tape t;
  std::vector<fusion::ProviderEntry> with{{t.constant(1.5), t.constant(0.0), Var{}, 1.0},
                                          {t.constant(-3.0), t.constant(0.2), t.constant(0.0), 0.0}};
  std::vector<fusion::ProviderEntry> without{with[0]};
  const bool excluded =
      t.item(*fusion::aggregate_modality(t, with)) == t.item(*fusion::aggregate_modality(t, without));
  return {"fusion: posterior mean and exclusion", worst < 1e-12 && excluded,
          fmt("max error %.2e, masked provider excluded %.0f", worst, excluded ? 1.0 : 0.0)};
}

CheckResult check_packets(core::Rng& rng) {
  comms::MetaPacket meta{513, 1, -2.5f};
  comms::FeaturePacket feat{7, 0, std::vector<float>(16), std::vector<float>(16)};
  for (auto& v : feat.f) v = static_cast<float>(core::standard_normal(rng));
  for (auto& v : feat.u) v = static_cast<float>(core::standard_normal(rng));
  const auto mb = comms::serialize(meta);
  const auto fb = comms::serialize(feat);
  const bool ok = mb.size() == comms::kMetaPacketBytes && fb.size() == comms::feature_packet_bytes(16) &&
                  comms::deserialize_meta(mb) == meta && comms::deserialize_feature(fb, 16) == feat;
  return {"comms: packet round trip", ok, fmt("meta %.0f bytes, feature %.0f bytes", mb.size(), fb.size())};
}

CheckResult check_loss() {
  Tape t;
  const Var logit = t.constant(0.0);
  std::vector<Var> us{t.constant(std::vector<double>{0.5, 0.5}), t.constant(std::vector<double>{-0.25, -0.25})};
  const auto v = training::values(t, training::loss(t, logit, 1, us, 1.0));
  const bool ok = std::abs(v.task - std::log(2.0)) < 1e-12 && std::abs(v.reg - 0.25) < 1e-12 &&
                  std::abs(v.total - (v.task + v.reg)) < 1e-12;
  return {"training: loss breakdown", ok, fmt("task %.6f reg %.6f", v.task, v.reg)};
}

}  // namespace

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  auto rng = core::make_rng({seed, 0x5e1fu});
  std::vector<CheckResult> out;
  out.push_back(check_ops(rng));
  out.push_back(check_networks(rng));
  out.push_back(check_gumbel(rng));
  out.push_back(check_straight_through(rng));
  out.push_back(check_fusion(rng));
  out.push_back(check_packets(rng));
  out.push_back(check_loss());
  return out;
}

}  // namespace cofuse::experiment
