#include "cofuse/comms/protocol.hpp"

#include <ostream>
#include <stdexcept>
#include <string>

namespace cofuse::comms {

void EncodedStore::put(std::size_t agent, std::size_t modality, encoders::GaussianFeature feature) {
  if (auto* existing = get_mut(agent, modality)) {
    *existing = std::move(feature);
    return;
  }
  items_.push_back({agent, modality, std::move(feature)});
}

const encoders::GaussianFeature* EncodedStore::get(std::size_t agent, std::size_t modality) const {
  for (const auto& it : items_) {
    if (it.agent == agent && it.modality == modality) return &it.feature;
  }
  return nullptr;
}

encoders::GaussianFeature* EncodedStore::get_mut(std::size_t agent, std::size_t modality) {
  for (auto& it : items_) {
    if (it.agent == agent && it.modality == modality) return &it.feature;
  }
  return nullptr;
}

HandshakeResult handshake(const world::Frame& frame, const EncodedStore& encoded) {
  HandshakeResult out;
  for (std::size_t agent : frame.neighbor_set) {
    for (const auto& obs : frame.observations) {
      if (obs.agent != agent) continue;
      const auto* feat = encoded.get(agent, obs.modality);
      if (!feat) {
        throw WireError("handshake: agent " + std::to_string(agent) + " has no encoding for modality " +
                        std::to_string(obs.modality));
      }
      const MetaPacket pkt{static_cast<std::uint16_t>(agent), static_cast<std::uint8_t>(obs.modality),
                           static_cast<float>(feat->rho)};
      const auto wire = serialize(pkt);
      out.bytes += wire.size();
      out.received.push_back(deserialize_meta(wire));
    }
  }
  return out;
}

RequestResult request_features(const selection::DecisionMatrix& decisions, const EncodedStore& encoded,
                               std::size_t dim) {
  RequestResult out;
  for (const auto& d : decisions.entries) {
    if (d.z != selection::kAccept) continue;
    const auto* feat = encoded.get(d.agent, d.modality);
    if (!feat) {
      throw WireError("request_features: accepted pair (agent " + std::to_string(d.agent) + ", modality " +
                      std::to_string(d.modality) + ") has no encoding");
    }
    if (feat->f.size() != dim || feat->u.size() != dim) {
      throw WireError("request_features: encoding dimension does not match D=" + std::to_string(dim));
    }
    FeaturePacket pkt;
    pkt.sender = static_cast<std::uint16_t>(d.agent);
    pkt.modality = static_cast<std::uint8_t>(d.modality);
    pkt.f.assign(feat->f.begin(), feat->f.end());
    pkt.u.assign(feat->u.begin(), feat->u.end());
    const auto wire = serialize(pkt);
    out.bytes += wire.size();
    out.received.push_back(deserialize_feature(wire, dim));
  }
  return out;
}

std::size_t request_bytes(std::size_t offered_pairs) { return (offered_pairs + 7) / 8; }

double package_size(std::span<const FrameCommLog> logs) {
  if (logs.empty()) throw std::invalid_argument("package_size: no frames logged");
  double total = 0.0;
  for (const auto& l : logs) total += static_cast<double>(l.total_bytes);
  return total / static_cast<double>(logs.size()) / 1024.0;
}

void write_comm_csv(std::ostream& os, std::span<const FrameCommLog> logs) {
  os << "frame,meta_bytes,feature_bytes,request_bytes,total_bytes,accepted_pairs,offered_pairs\n";
  for (const auto& l : logs) {
    os << l.frame << ',' << l.meta_bytes << ',' << l.feature_bytes << ',' << l.request_bytes << ','
       << l.total_bytes << ',' << l.accepted_pairs << ',' << l.offered_pairs << '\n';
  }
}

}  // namespace cofuse::comms
