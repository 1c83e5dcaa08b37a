#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace cofuse::comms {

// Wire layout, little-endian throughout:
//   MetaPacket     u16 sender | u8 modality | f32 rho                  (7 bytes)
//   FeaturePacket  u16 sender | u8 modality | f32 f[D] | f32 u[D]      (3 + 8D bytes)
inline constexpr std::size_t kMetaPacketBytes = 7;
inline constexpr std::size_t feature_packet_bytes(std::size_t dim) { return 3 + 8 * dim; }

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetaPacket {
  std::uint16_t sender = 0;
  std::uint8_t modality = 0;
  float rho = 0.0f;
  bool operator==(const MetaPacket&) const = default;
};

struct FeaturePacket {
  std::uint16_t sender = 0;
  std::uint8_t modality = 0;
  std::vector<float> f;
  std::vector<float> u;
  bool operator==(const FeaturePacket&) const = default;
};

std::vector<std::uint8_t> serialize(const MetaPacket& pkt);
MetaPacket deserialize_meta(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize(const FeaturePacket& pkt);
FeaturePacket deserialize_feature(std::span<const std::uint8_t> bytes, std::size_t dim);

}  // namespace cofuse::comms
