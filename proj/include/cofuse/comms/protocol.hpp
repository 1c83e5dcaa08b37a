#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "cofuse/comms/packets.hpp"
#include "cofuse/encoders/encoder.hpp"
#include "cofuse/selection/policy.hpp"
#include "cofuse/world/world.hpp"

namespace cofuse::comms {

// Encodings held on the sending side, keyed by (agent, modality).
class EncodedStore {
 public:
  void put(std::size_t agent, std::size_t modality, encoders::GaussianFeature feature);
  const encoders::GaussianFeature* get(std::size_t agent, std::size_t modality) const;
  encoders::GaussianFeature* get_mut(std::size_t agent, std::size_t modality);

 private:
  struct Item {
    std::size_t agent;
    std::size_t modality;
    encoders::GaussianFeature feature;
  };
  std::vector<Item> items_;
};

struct FrameCommLog {
  std::size_t frame = 0;
  std::size_t meta_bytes = 0;
  std::size_t feature_bytes = 0;
  std::size_t request_bytes = 0;
  std::size_t total_bytes = 0;
  std::size_t accepted_pairs = 0;
  std::size_t offered_pairs = 0;
};

struct HandshakeResult {
  std::vector<MetaPacket> received;
  std::size_t bytes = 0;
};

struct RequestResult {
  std::vector<FeaturePacket> received;
  std::size_t bytes = 0;
};

// Every in-range collaborator broadcasts one meta-packet per modality it
// carries. Packets cross the wire as bytes; the ego sees the decoded copies.
HandshakeResult handshake(const world::Frame& frame, const EncodedStore& encoded);

// Feature payloads for every pair accepted in forward value. Rejected pairs
// are never read. Throws WireError if an accepted pair has no encoding.
RequestResult request_features(const selection::DecisionMatrix& decisions, const EncodedStore& encoded,
                               std::size_t dim);

// Request bitmap size when request traffic is metered: one bit per offered pair.
std::size_t request_bytes(std::size_t offered_pairs);

// Mean bytes per frame in kilobytes (1024 bytes). Throws on empty input.
double package_size(std::span<const FrameCommLog> logs);

void write_comm_csv(std::ostream& os, std::span<const FrameCommLog> logs);

}  // namespace cofuse::comms
