#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <sstream>

#include "cofuse/comms/protocol.hpp"
#include "cofuse/training/model.hpp"

using namespace cofuse;
using namespace cofuse::comms;

TEST_CASE("meta packet bytes") {
  const auto wire = serialize(MetaPacket{3, 1, 0.5f});
  CHECK(wire == std::vector<std::uint8_t>{0x03, 0x00, 0x01, 0x00, 0x00, 0x00, 0x3F});
  CHECK(wire.size() == kMetaPacketBytes);
  CHECK(serialize(MetaPacket{0x1234, 2, -2.0f}) == std::vector<std::uint8_t>{0x34, 0x12, 0x02, 0x00, 0x00, 0x00, 0xC0});
}

TEST_CASE("feature packet bytes") {
  FeaturePacket pkt{5, 0, {1.0f}, {-2.0f}};
  const auto wire = serialize(pkt);
  CHECK(wire == std::vector<std::uint8_t>{0x05, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0xC0});
  CHECK(feature_packet_bytes(1) == 11);
  CHECK(feature_packet_bytes(16) == 131);
}

TEST_CASE("packets round trip") {
  auto rng = core::make_rng({11});
  std::normal_distribution<float> n(0.0f, 3.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const MetaPacket m{static_cast<std::uint16_t>(trial * 311), static_cast<std::uint8_t>(trial % 7), n(rng)};
    CHECK(deserialize_meta(serialize(m)) == m);
    FeaturePacket f{static_cast<std::uint16_t>(trial), static_cast<std::uint8_t>(trial % 3), {}, {}};
    const std::size_t d = 1 + trial % 20;
    for (std::size_t k = 0; k < d; ++k) {
      f.f.push_back(n(rng));
      f.u.push_back(n(rng));
    }
    CHECK(deserialize_feature(serialize(f), d) == f);
  }
  FeaturePacket special{1, 1, {std::numeric_limits<float>::infinity(), -0.0f}, {1e-40f, 3.4e38f}};
  const auto back = deserialize_feature(serialize(special), 2);
  CHECK(back == special);
  CHECK(std::signbit(back.f[1]));
}

TEST_CASE("malformed wire data is rejected") {
  CHECK_THROWS_AS(deserialize_meta(std::vector<std::uint8_t>(6)), WireError);
  CHECK_THROWS_AS(deserialize_meta(std::vector<std::uint8_t>(8)), WireError);
  CHECK_THROWS_AS(deserialize_feature(std::vector<std::uint8_t>(18), 2), WireError);
  CHECK_THROWS_AS(serialize(FeaturePacket{0, 0, {1.0f}, {1.0f, 2.0f}}), WireError);
}

TEST_CASE("package size") {
  std::vector<FrameCommLog> logs(2);
  logs[0].total_bytes = 1024;
  logs[1].total_bytes = 2048;
  CHECK(package_size(logs) == 1.5);
  CHECK_THROWS(package_size(std::span<const FrameCommLog>{}));
  CHECK(request_bytes(0) == 0);
  CHECK(request_bytes(1) == 1);
  CHECK(request_bytes(9) == 2);
  std::ostringstream os;
  write_comm_csv(os, logs);
  CHECK(os.str().rfind("frame,meta_bytes,feature_bytes,request_bytes,total_bytes,accepted_pairs,offered_pairs\n", 0) ==
        0);
}

TEST_CASE("requests move only accepted pairs") {
  EncodedStore store;
  store.put(1, 0, {{1, 2}, {0.1, 0.2}, -1.0});
  store.put(2, 0, {{3, 4}, {0.3, 0.4}, -2.0});
  selection::DecisionMatrix dm;
  dm.entries.push_back({1, 0, {}, {}, 0.0, selection::kReject, {}});
  dm.entries.push_back({2, 0, {}, {}, 1.0, selection::kAccept, {}});
  const auto rx = request_features(dm, store, 2);
  REQUIRE(rx.received.size() == 1);
  CHECK(rx.received[0].sender == 2);
  CHECK(rx.received[0].f == std::vector<float>{3, 4});
  CHECK(rx.bytes == feature_packet_bytes(2));
  dm.entries.push_back({3, 0, {}, {}, 1.0, selection::kAccept, {}});
  CHECK_THROWS_AS(request_features(dm, store, 2), WireError);
  CHECK_THROWS_AS(request_features(dm, store, 3), WireError);
}

namespace {

training::Model model_with_bias(double reject, double accept) {
  world::ScenarioConfig sc;
  auto model = training::Model::init(sc, {}, training::Variant::Full, 1);
  auto rng = core::make_rng({12});
  for (auto& v : model.policy.hidden.weight.data) v = core::standard_normal(rng);
  model.policy.out.bias.data = {reject, accept};
  return model;
}

training::FrameOutput eval(const training::Model& model, const world::Frame& frame,
                           const training::EvalHooks* hooks = nullptr) {
  const auto params = model.parameters();
  core::Tape t;
  core::ParamBinder bind(t, params);
  return training::forward_frame(bind, model, frame, training::Mode::Eval, nullptr, hooks);
}

double logit_of(const training::Model& model, const world::Frame& frame, const training::EvalHooks* hooks = nullptr) {
  const auto params = model.parameters();
  core::Tape t;
  core::ParamBinder bind(t, params);
  return t.item(training::forward_frame(bind, model, frame, training::Mode::Eval, nullptr, hooks).logit);
}

training::EvalHooks tamper(bool only_rejected) {
  training::EvalHooks h;
  h.before_transmit = [only_rejected](EncodedStore& store, const selection::DecisionMatrix& dm) {
    for (const auto& d : dm.entries) {
      if (only_rejected && d.z == selection::kAccept) continue;
      auto* f = store.get_mut(d.agent, d.modality);
      for (auto& v : f->f) v = std::numeric_limits<double>::quiet_NaN();
      for (auto& v : f->u) v = 1e6;
    }
  };
  return h;
}

}  // namespace

TEST_CASE("rejected payloads cannot influence the prediction") {
  world::ScenarioConfig sc;
  const auto frames = world::generate_frames(sc, 60, 0);
  const auto hooks = tamper(true);
  std::size_t checked = 0;
  for (const auto& model : {model_with_bias(50.0, 0.0), model_with_bias(0.0, 0.0)}) {
    for (const auto& f : frames) {
      if (f.neighbor_set.empty()) continue;
      CHECK(logit_of(model, f, &hooks) == logit_of(model, f));
      ++checked;
    }
  }
  CHECK(checked > 0);

  // Tampering with accepted payloads does reach the ego.
  const auto accept_all = model_with_bias(-50.0, 0.0);
  const auto all = tamper(false);
  bool changed = false;
  for (const auto& f : frames) {
    if (!f.neighbor_set.empty()) changed = changed || !(logit_of(accept_all, f, &all) == logit_of(accept_all, f));
  }
  CHECK(changed);
}

TEST_CASE("per-frame byte accounting") {
  world::ScenarioConfig sc;
  const auto frames = world::generate_frames(sc, 80, 1);
  auto model = model_with_bias(0.0, 0.0);
  std::size_t mixed = 0;
  for (const auto& f : frames) {
    const auto out = eval(model, f);
    std::size_t offered = 0;
    for (const auto& o : f.observations) {
      offered += std::count(f.neighbor_set.begin(), f.neighbor_set.end(), o.agent);
    }
    CHECK(out.decisions.entries.size() == offered);
    for (const auto& d : out.decisions.entries) {
      CHECK(std::find(f.neighbor_set.begin(), f.neighbor_set.end(), d.agent) != f.neighbor_set.end());
    }
    CHECK(out.comm.meta_bytes == kMetaPacketBytes * offered);
    CHECK(out.comm.feature_bytes == feature_packet_bytes(model.config.dim) * out.decisions.accepted());
    CHECK(out.comm.total_bytes == out.comm.meta_bytes + out.comm.feature_bytes + out.comm.request_bytes);
    CHECK(out.comm.request_bytes == 0);
    if (out.decisions.accepted() > 0 && out.decisions.accepted() < offered) ++mixed;
  }
  MESSAGE("frames with a mixed decision: " << mixed);

  model.config.meter_requests = true;
  for (const auto& f : frames) {
    const auto out = eval(model, f);
    CHECK(out.comm.request_bytes == request_bytes(out.decisions.entries.size()));
  }
}
