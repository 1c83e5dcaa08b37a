#include "cofuse/comms/packets.hpp"

#include <bit>
#include <string>

namespace cofuse::comms {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

float get_f32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(b[at + k]) << (8 * k);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::vector<std::uint8_t> serialize(const MetaPacket& pkt) {
  std::vector<std::uint8_t> out;
  out.reserve(kMetaPacketBytes);
  put_u16(out, pkt.sender);
  out.push_back(pkt.modality);
  put_f32(out, pkt.rho);
  return out;
}

MetaPacket deserialize_meta(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kMetaPacketBytes) {
    throw WireError("meta packet: expected 7 bytes, got " + std::to_string(bytes.size()));
  }
  return MetaPacket{get_u16(bytes, 0), bytes[2], get_f32(bytes, 3)};
}

std::vector<std::uint8_t> serialize(const FeaturePacket& pkt) {
  if (pkt.f.size() != pkt.u.size()) throw WireError("feature packet: f and u lengths differ");
  std::vector<std::uint8_t> out;
  out.reserve(feature_packet_bytes(pkt.f.size()));
  put_u16(out, pkt.sender);
  out.push_back(pkt.modality);
  for (float v : pkt.f) put_f32(out, v);
  for (float v : pkt.u) put_f32(out, v);
  return out;
}

FeaturePacket deserialize_feature(std::span<const std::uint8_t> bytes, std::size_t dim) {
  if (bytes.size() != feature_packet_bytes(dim)) {
    throw WireError("feature packet: expected " + std::to_string(feature_packet_bytes(dim)) + " bytes for D=" +
                    std::to_string(dim) + ", got " + std::to_string(bytes.size()));
  }
  FeaturePacket pkt;
  pkt.sender = get_u16(bytes, 0);
  pkt.modality = bytes[2];
  pkt.f.resize(dim);
  pkt.u.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) pkt.f[i] = get_f32(bytes, 3 + 4 * i);
  for (std::size_t i = 0; i < dim; ++i) pkt.u[i] = get_f32(bytes, 3 + 4 * (dim + i));
  return pkt;
}

}  // namespace cofuse::comms
