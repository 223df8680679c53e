#pragma once

#include <compare>
#include <cstdint>
#include <functional>

#include "trapforge/packet.hpp"
#include "trapforge/random.hpp"

namespace trapforge {

// Direction-insensitive 5-tuple: the lexicographically smaller (ip, port)
// endpoint is stored first, so both directions of a conversation share a key.
struct FlowKey {
  std::uint32_t ip_a = 0;
  std::uint16_t port_a = 0;
  std::uint32_t ip_b = 0;
  std::uint16_t port_b = 0;
  std::uint8_t proto = 0;

  auto operator<=>(const FlowKey&) const = default;

  static FlowKey of(const PacketRecord& r) {
    FlowKey k;
    k.proto = r.ip_proto;
    const bool src_first =
        r.src_ip < r.dst_ip || (r.src_ip == r.dst_ip && r.src_port <= r.dst_port);
    if (src_first) {
      k.ip_a = r.src_ip;
      k.port_a = r.src_port;
      k.ip_b = r.dst_ip;
      k.port_b = r.dst_port;
    } else {
      k.ip_a = r.dst_ip;
      k.port_a = r.dst_port;
      k.ip_b = r.src_ip;
      k.port_b = r.src_port;
    }
    return k;
  }
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const {
    std::uint64_t h = splitmix64(std::uint64_t{k.ip_a} << 32 | k.ip_b);
    h ^= splitmix64(std::uint64_t{k.port_a} << 24 | std::uint64_t{k.port_b} << 8 | k.proto);
    return static_cast<std::size_t>(splitmix64(h));
  }
};

}  // namespace trapforge
