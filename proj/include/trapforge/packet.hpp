#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "trapforge/byteio.hpp"
#include "trapforge/errors.hpp"

namespace trapforge {

// Link types as stored in pcap global headers.
enum class LinkType : std::uint32_t {
  ethernet = 1,
  raw_ip = 101,
};

// One tidy row: 6 context-aware fields, 35 packet-intrinsic fields, plus an
// optional class label. Flag fields hold 0/1; option value fields hold 0 when
// the option is absent (the matching *_present bit says which).
struct PacketRecord {
  // context
  std::uint64_t ts_epoch_us = 0;
  std::uint32_t src_ip = 0;  // host byte order
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t ip_proto = 0;

  // intrinsic: frame
  std::uint32_t frame_len = 0;

  // intrinsic: IPv4 header
  std::uint8_t ip_version = 0;
  std::uint8_t ip_ihl = 0;
  std::uint8_t ip_dscp = 0;
  std::uint8_t ip_ecn = 0;
  std::uint16_t ip_total_len = 0;
  std::uint16_t ip_id = 0;
  std::uint8_t ip_flag_rf = 0;
  std::uint8_t ip_flag_df = 0;
  std::uint8_t ip_flag_mf = 0;
  std::uint16_t ip_frag_offset = 0;
  std::uint8_t ip_ttl = 0;
  std::uint16_t ip_checksum = 0;

  // intrinsic: TCP header
  std::uint32_t tcp_seq = 0;
  std::uint32_t tcp_ack = 0;
  std::uint8_t tcp_data_offset = 0;
  std::uint8_t tcp_reserved = 0;  // 4 bits between data offset and CWR
  std::uint8_t tcp_flag_cwr = 0;
  std::uint8_t tcp_flag_ece = 0;
  std::uint8_t tcp_flag_urg = 0;
  std::uint8_t tcp_flag_ack = 0;
  std::uint8_t tcp_flag_psh = 0;
  std::uint8_t tcp_flag_rst = 0;
  std::uint8_t tcp_flag_syn = 0;
  std::uint8_t tcp_flag_fin = 0;
  std::uint16_t tcp_window = 0;
  std::uint16_t tcp_checksum = 0;
  std::uint16_t tcp_urgent_ptr = 0;

  // intrinsic: TCP options
  std::uint8_t tcp_opt_mss_present = 0;
  std::uint16_t tcp_opt_mss = 0;
  std::uint8_t tcp_opt_wscale_present = 0;
  std::uint8_t tcp_opt_wscale = 0;
  std::uint8_t tcp_opt_sackok_present = 0;
  std::uint8_t tcp_opt_ts_present = 0;

  // intrinsic: payload
  std::uint32_t payload_len = 0;

  std::optional<std::string> label;

  bool operator==(const PacketRecord&) const = default;
};

enum class FeatureId : int {
  ts_epoch_us = 0,
  src_ip,
  dst_ip,
  src_port,
  dst_port,
  ip_proto,
  frame_len,
  ip_version,
  ip_ihl,
  ip_dscp,
  ip_ecn,
  ip_total_len,
  ip_id,
  ip_flag_rf,
  ip_flag_df,
  ip_flag_mf,
  ip_frag_offset,
  ip_ttl,
  ip_checksum,
  tcp_seq,
  tcp_ack,
  tcp_data_offset,
  tcp_reserved,
  tcp_flag_cwr,
  tcp_flag_ece,
  tcp_flag_urg,
  tcp_flag_ack,
  tcp_flag_psh,
  tcp_flag_rst,
  tcp_flag_syn,
  tcp_flag_fin,
  tcp_window,
  tcp_checksum,
  tcp_urgent_ptr,
  tcp_opt_mss_present,
  tcp_opt_mss,
  tcp_opt_wscale_present,
  tcp_opt_wscale,
  tcp_opt_sackok_present,
  tcp_opt_ts_present,
  payload_len,
};

inline constexpr std::size_t kContextFeatureCount = 6;
inline constexpr std::size_t kIntrinsicFeatureCount = 35;
inline constexpr std::size_t kFeatureCount = kContextFeatureCount + kIntrinsicFeatureCount;

struct FeatureInfo {
  FeatureId id;
  const char* name;
  bool is_ip;  // rendered dotted-quad in CSV
};

inline constexpr std::array<FeatureInfo, kFeatureCount> kFeatureCatalog{{
    {FeatureId::ts_epoch_us, "ts_epoch_us", false},
    {FeatureId::src_ip, "src_ip", true},
    {FeatureId::dst_ip, "dst_ip", true},
    {FeatureId::src_port, "src_port", false},
    {FeatureId::dst_port, "dst_port", false},
    {FeatureId::ip_proto, "ip_proto", false},
    {FeatureId::frame_len, "frame_len", false},
    {FeatureId::ip_version, "ip_version", false},
    {FeatureId::ip_ihl, "ip_ihl", false},
    {FeatureId::ip_dscp, "ip_dscp", false},
    {FeatureId::ip_ecn, "ip_ecn", false},
    {FeatureId::ip_total_len, "ip_total_len", false},
    {FeatureId::ip_id, "ip_id", false},
    {FeatureId::ip_flag_rf, "ip_flag_rf", false},
    {FeatureId::ip_flag_df, "ip_flag_df", false},
    {FeatureId::ip_flag_mf, "ip_flag_mf", false},
    {FeatureId::ip_frag_offset, "ip_frag_offset", false},
    {FeatureId::ip_ttl, "ip_ttl", false},
    {FeatureId::ip_checksum, "ip_checksum", false},
    {FeatureId::tcp_seq, "tcp_seq", false},
    {FeatureId::tcp_ack, "tcp_ack", false},
    {FeatureId::tcp_data_offset, "tcp_data_offset", false},
    {FeatureId::tcp_reserved, "tcp_reserved", false},
    {FeatureId::tcp_flag_cwr, "tcp_flag_cwr", false},
    {FeatureId::tcp_flag_ece, "tcp_flag_ece", false},
    {FeatureId::tcp_flag_urg, "tcp_flag_urg", false},
    {FeatureId::tcp_flag_ack, "tcp_flag_ack", false},
    {FeatureId::tcp_flag_psh, "tcp_flag_psh", false},
    {FeatureId::tcp_flag_rst, "tcp_flag_rst", false},
    {FeatureId::tcp_flag_syn, "tcp_flag_syn", false},
    {FeatureId::tcp_flag_fin, "tcp_flag_fin", false},
    {FeatureId::tcp_window, "tcp_window", false},
    {FeatureId::tcp_checksum, "tcp_checksum", false},
    {FeatureId::tcp_urgent_ptr, "tcp_urgent_ptr", false},
    {FeatureId::tcp_opt_mss_present, "tcp_opt_mss_present", false},
    {FeatureId::tcp_opt_mss, "tcp_opt_mss", false},
    {FeatureId::tcp_opt_wscale_present, "tcp_opt_wscale_present", false},
    {FeatureId::tcp_opt_wscale, "tcp_opt_wscale", false},
    {FeatureId::tcp_opt_sackok_present, "tcp_opt_sackok_present", false},
    {FeatureId::tcp_opt_ts_present, "tcp_opt_ts_present", false},
    {FeatureId::payload_len, "payload_len", false},
}};

inline const FeatureInfo* find_feature(std::string_view name) {
  for (const auto& f : kFeatureCatalog) {
    if (name == f.name) return &f;
  }
  return nullptr;
}

inline std::uint64_t feature_value(const PacketRecord& r, FeatureId id) {
  switch (id) {
    case FeatureId::ts_epoch_us: return r.ts_epoch_us;
    case FeatureId::src_ip: return r.src_ip;
    case FeatureId::dst_ip: return r.dst_ip;
    case FeatureId::src_port: return r.src_port;
    case FeatureId::dst_port: return r.dst_port;
    case FeatureId::ip_proto: return r.ip_proto;
    case FeatureId::frame_len: return r.frame_len;
    case FeatureId::ip_version: return r.ip_version;
    case FeatureId::ip_ihl: return r.ip_ihl;
    case FeatureId::ip_dscp: return r.ip_dscp;
    case FeatureId::ip_ecn: return r.ip_ecn;
    case FeatureId::ip_total_len: return r.ip_total_len;
    case FeatureId::ip_id: return r.ip_id;
    case FeatureId::ip_flag_rf: return r.ip_flag_rf;
    case FeatureId::ip_flag_df: return r.ip_flag_df;
    case FeatureId::ip_flag_mf: return r.ip_flag_mf;
    case FeatureId::ip_frag_offset: return r.ip_frag_offset;
    case FeatureId::ip_ttl: return r.ip_ttl;
    case FeatureId::ip_checksum: return r.ip_checksum;
    case FeatureId::tcp_seq: return r.tcp_seq;
    case FeatureId::tcp_ack: return r.tcp_ack;
    case FeatureId::tcp_data_offset: return r.tcp_data_offset;
    case FeatureId::tcp_reserved: return r.tcp_reserved;
    case FeatureId::tcp_flag_cwr: return r.tcp_flag_cwr;
    case FeatureId::tcp_flag_ece: return r.tcp_flag_ece;
    case FeatureId::tcp_flag_urg: return r.tcp_flag_urg;
    case FeatureId::tcp_flag_ack: return r.tcp_flag_ack;
    case FeatureId::tcp_flag_psh: return r.tcp_flag_psh;
    case FeatureId::tcp_flag_rst: return r.tcp_flag_rst;
    case FeatureId::tcp_flag_syn: return r.tcp_flag_syn;
    case FeatureId::tcp_flag_fin: return r.tcp_flag_fin;
    case FeatureId::tcp_window: return r.tcp_window;
    case FeatureId::tcp_checksum: return r.tcp_checksum;
    case FeatureId::tcp_urgent_ptr: return r.tcp_urgent_ptr;
    case FeatureId::tcp_opt_mss_present: return r.tcp_opt_mss_present;
    case FeatureId::tcp_opt_mss: return r.tcp_opt_mss;
    case FeatureId::tcp_opt_wscale_present: return r.tcp_opt_wscale_present;
    case FeatureId::tcp_opt_wscale: return r.tcp_opt_wscale;
    case FeatureId::tcp_opt_sackok_present: return r.tcp_opt_sackok_present;
    case FeatureId::tcp_opt_ts_present: return r.tcp_opt_ts_present;
    case FeatureId::payload_len: return r.payload_len;
  }
  return 0;
}

inline void set_feature(PacketRecord& r, FeatureId id, std::uint64_t v) {
  switch (id) {
    case FeatureId::ts_epoch_us: r.ts_epoch_us = v; break;
    case FeatureId::src_ip: r.src_ip = static_cast<std::uint32_t>(v); break;
    case FeatureId::dst_ip: r.dst_ip = static_cast<std::uint32_t>(v); break;
    case FeatureId::src_port: r.src_port = static_cast<std::uint16_t>(v); break;
    case FeatureId::dst_port: r.dst_port = static_cast<std::uint16_t>(v); break;
    case FeatureId::ip_proto: r.ip_proto = static_cast<std::uint8_t>(v); break;
    case FeatureId::frame_len: r.frame_len = static_cast<std::uint32_t>(v); break;
    case FeatureId::ip_version: r.ip_version = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_ihl: r.ip_ihl = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_dscp: r.ip_dscp = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_ecn: r.ip_ecn = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_total_len: r.ip_total_len = static_cast<std::uint16_t>(v); break;
    case FeatureId::ip_id: r.ip_id = static_cast<std::uint16_t>(v); break;
    case FeatureId::ip_flag_rf: r.ip_flag_rf = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_flag_df: r.ip_flag_df = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_flag_mf: r.ip_flag_mf = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_frag_offset: r.ip_frag_offset = static_cast<std::uint16_t>(v); break;
    case FeatureId::ip_ttl: r.ip_ttl = static_cast<std::uint8_t>(v); break;
    case FeatureId::ip_checksum: r.ip_checksum = static_cast<std::uint16_t>(v); break;
    case FeatureId::tcp_seq: r.tcp_seq = static_cast<std::uint32_t>(v); break;
    case FeatureId::tcp_ack: r.tcp_ack = static_cast<std::uint32_t>(v); break;
    case FeatureId::tcp_data_offset: r.tcp_data_offset = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_reserved: r.tcp_reserved = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_cwr: r.tcp_flag_cwr = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_ece: r.tcp_flag_ece = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_urg: r.tcp_flag_urg = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_ack: r.tcp_flag_ack = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_psh: r.tcp_flag_psh = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_rst: r.tcp_flag_rst = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_syn: r.tcp_flag_syn = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_flag_fin: r.tcp_flag_fin = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_window: r.tcp_window = static_cast<std::uint16_t>(v); break;
    case FeatureId::tcp_checksum: r.tcp_checksum = static_cast<std::uint16_t>(v); break;
    case FeatureId::tcp_urgent_ptr: r.tcp_urgent_ptr = static_cast<std::uint16_t>(v); break;
    case FeatureId::tcp_opt_mss_present: r.tcp_opt_mss_present = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_opt_mss: r.tcp_opt_mss = static_cast<std::uint16_t>(v); break;
    case FeatureId::tcp_opt_wscale_present: r.tcp_opt_wscale_present = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_opt_wscale: r.tcp_opt_wscale = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_opt_sackok_present: r.tcp_opt_sackok_present = static_cast<std::uint8_t>(v); break;
    case FeatureId::tcp_opt_ts_present: r.tcp_opt_ts_present = static_cast<std::uint8_t>(v); break;
    case FeatureId::payload_len: r.payload_len = static_cast<std::uint32_t>(v); break;
  }
}

// Ordered column names partitioned into the context set, the intrinsic set,
// and the label column.
struct FeatureSchema {
  std::vector<std::string> context;
  std::vector<std::string> intrinsic;
  std::string label = "label";

  bool operator==(const FeatureSchema&) const = default;

  std::size_t column_count() const { return context.size() + intrinsic.size() + 1; }

  // The full 41-column tidy schema, catalog order.
  static FeatureSchema tidy() {
    FeatureSchema s;
    for (std::size_t i = 0; i < kContextFeatureCount; ++i) s.context.emplace_back(kFeatureCatalog[i].name);
    for (std::size_t i = kContextFeatureCount; i < kFeatureCount; ++i)
      s.intrinsic.emplace_back(kFeatureCatalog[i].name);
    return s;
  }

  static FeatureSchema stateless() {
    FeatureSchema s = tidy();
    s.context.clear();
    return s;
  }
};

struct TidyDataset {
  FeatureSchema schema = FeatureSchema::tidy();
  std::vector<PacketRecord> rows;
};

enum class SkipReason {
  not_ipv4,
  not_tcp,  // also covers non-first IP fragments, which carry no TCP header
  truncated,
  malformed_header,
};

inline const char* skip_reason_name(SkipReason r) {
  switch (r) {
    case SkipReason::not_ipv4: return "not_ipv4";
    case SkipReason::not_tcp: return "not_tcp";
    case SkipReason::truncated: return "truncated";
    case SkipReason::malformed_header: return "malformed_header";
  }
  return "?";
}

using ExtractResult = std::variant<PacketRecord, SkipReason>;

inline bool extract_ok(const ExtractResult& r) { return std::holds_alternative<PacketRecord>(r); }

// RFC 1071 internet checksum over a byte span (odd trailing byte padded).
inline std::uint16_t internet_checksum(std::span<const std::uint8_t> data, std::uint32_t initial = 0) {
  std::uint64_t sum = initial;
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += static_cast<std::uint32_t>(data[i]) << 8 | data[i + 1];
  if (i < data.size()) sum += static_cast<std::uint32_t>(data[i]) << 8;
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum & 0xffff);
}

// Checksum of the TCP segment with its IPv4 pseudo-header.
inline std::uint16_t tcp_checksum_ipv4(std::uint32_t src_ip, std::uint32_t dst_ip,
                                       std::span<const std::uint8_t> segment) {
  std::uint64_t sum = 0;
  sum += src_ip >> 16;
  sum += src_ip & 0xffff;
  sum += dst_ip >> 16;
  sum += dst_ip & 0xffff;
  sum += 6;  // protocol
  sum += segment.size();
  std::size_t i = 0;
  for (; i + 1 < segment.size(); i += 2)
    sum += static_cast<std::uint32_t>(segment[i]) << 8 | segment[i + 1];
  if (i < segment.size()) sum += static_cast<std::uint32_t>(segment[i]) << 8;
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum & 0xffff);
}

namespace detail {

// Returns the offset of the IPv4 header within the frame, or a skip reason.
// Handles Ethernet II (with one optional 802.1Q tag) and raw-IP link types.
inline std::variant<std::size_t, SkipReason> ip_header_offset(std::span<const std::uint8_t> frame,
                                                              LinkType link) {
  if (link == LinkType::raw_ip) return std::size_t{0};
  if (frame.size() < 14) return SkipReason::truncated;
  std::uint16_t ethertype = byteio::rd_be16(frame, 12);
  std::size_t off = 14;
  if (ethertype == 0x8100) {  // single VLAN tag
    if (frame.size() < 18) return SkipReason::truncated;
    ethertype = byteio::rd_be16(frame, 16);
    off = 18;
  }
  if (ethertype != 0x0800) return SkipReason::not_ipv4;
  return off;
}

}  // namespace detail

// Parses one link-layer frame into a tidy row. TCP over IPv4 only; anything
// else comes back as a typed skip reason.
inline ExtractResult extract_features(std::span<const std::uint8_t> frame, LinkType link,
                                      std::uint64_t ts_epoch_us) {
  auto off_or_skip = detail::ip_header_offset(frame, link);
  if (std::holds_alternative<SkipReason>(off_or_skip)) return std::get<SkipReason>(off_or_skip);
  const std::size_t ip_off = std::get<std::size_t>(off_or_skip);

  if (frame.size() < ip_off + 20) return SkipReason::truncated;
  auto ip = frame.subspan(ip_off);

  const std::uint8_t version = ip[0] >> 4;
  const std::uint8_t ihl = ip[0] & 0x0f;
  if (version != 4) return SkipReason::not_ipv4;
  if (ihl < 5) return SkipReason::malformed_header;
  const std::size_t ip_header_len = std::size_t{ihl} * 4;
  if (ip.size() < ip_header_len) return SkipReason::truncated;

  PacketRecord r;
  r.ts_epoch_us = ts_epoch_us;
  r.frame_len = static_cast<std::uint32_t>(frame.size());
  r.ip_version = version;
  r.ip_ihl = ihl;
  r.ip_dscp = ip[1] >> 2;
  r.ip_ecn = ip[1] & 0x03;
  r.ip_total_len = byteio::rd_be16(ip, 2);
  r.ip_id = byteio::rd_be16(ip, 4);
  const std::uint16_t flags_frag = byteio::rd_be16(ip, 6);
  r.ip_flag_rf = (flags_frag >> 15) & 1;
  r.ip_flag_df = (flags_frag >> 14) & 1;
  r.ip_flag_mf = (flags_frag >> 13) & 1;
  r.ip_frag_offset = flags_frag & 0x1fff;
  r.ip_ttl = ip[8];
  r.ip_proto = ip[9];
  r.ip_checksum = byteio::rd_be16(ip, 10);
  r.src_ip = byteio::rd_be32(ip, 12);
  r.dst_ip = byteio::rd_be32(ip, 16);

  if (r.ip_proto != 6) return SkipReason::not_tcp;
  // Non-first fragments carry payload bytes where the TCP header would be.
  if (r.ip_frag_offset != 0) return SkipReason::not_tcp;

  if (ip.size() < ip_header_len + 20) return SkipReason::truncated;
  auto tcp = ip.subspan(ip_header_len);

  r.src_port = byteio::rd_be16(tcp, 0);
  r.dst_port = byteio::rd_be16(tcp, 2);
  r.tcp_seq = byteio::rd_be32(tcp, 4);
  r.tcp_ack = byteio::rd_be32(tcp, 8);
  const std::uint8_t data_offset = tcp[12] >> 4;
  if (data_offset < 5) return SkipReason::malformed_header;
  const std::size_t tcp_header_len = std::size_t{data_offset} * 4;
  if (tcp.size() < tcp_header_len) return SkipReason::truncated;
  r.tcp_data_offset = data_offset;
  r.tcp_reserved = tcp[12] & 0x0f;
  const std::uint8_t flags = tcp[13];
  r.tcp_flag_cwr = (flags >> 7) & 1;
  r.tcp_flag_ece = (flags >> 6) & 1;
  r.tcp_flag_urg = (flags >> 5) & 1;
  r.tcp_flag_ack = (flags >> 4) & 1;
  r.tcp_flag_psh = (flags >> 3) & 1;
  r.tcp_flag_rst = (flags >> 2) & 1;
  r.tcp_flag_syn = (flags >> 1) & 1;
  r.tcp_flag_fin = flags & 1;
  r.tcp_window = byteio::rd_be16(tcp, 14);
  r.tcp_checksum = byteio::rd_be16(tcp, 16);
  r.tcp_urgent_ptr = byteio::rd_be16(tcp, 18);

  // TCP options: MSS(2), WSCALE(3), SACK-permitted(4), timestamps(8).
  // A malformed TLV ends option parsing; the record itself stays valid.
  std::size_t opt = 20;
  while (opt < tcp_header_len) {
    const std::uint8_t kind = tcp[opt];
    if (kind == 0) break;  // end of options
    if (kind == 1) {       // NOP
      ++opt;
      continue;
    }
    if (opt + 1 >= tcp_header_len) break;
    const std::uint8_t len = tcp[opt + 1];
    if (len < 2 || opt + len > tcp_header_len) break;
    switch (kind) {
      case 2:
        if (len == 4) {
          r.tcp_opt_mss_present = 1;
          r.tcp_opt_mss = byteio::rd_be16(tcp, opt + 2);
        }
        break;
      case 3:
        if (len == 3) {
          r.tcp_opt_wscale_present = 1;
          r.tcp_opt_wscale = tcp[opt + 2];
        }
        break;
      case 4:
        if (len == 2) r.tcp_opt_sackok_present = 1;
        break;
      case 8:
        if (len == 10) r.tcp_opt_ts_present = 1;
        break;
      default:
        break;
    }
    opt += len;
  }

  const std::int64_t payload =
      static_cast<std::int64_t>(r.ip_total_len) - static_cast<std::int64_t>(ip_header_len) -
      static_cast<std::int64_t>(tcp_header_len);
  if (payload < 0) return SkipReason::malformed_header;
  r.payload_len = static_cast<std::uint32_t>(payload);

  return r;
}

// Re-checks every PacketRecord invariant; returns one entry per violation.
inline std::vector<std::string> validate_record(const PacketRecord& r) {
  std::vector<std::string> v;
  if (r.ip_version != 4) v.push_back("ip_version must be 4");
  if (r.ip_ihl < 5 || r.ip_ihl > 15) v.push_back("ip_ihl out of [5,15]");
  if (r.tcp_data_offset < 5 || r.tcp_data_offset > 15) v.push_back("tcp_data_offset out of [5,15]");
  const struct {
    const char* name;
    std::uint8_t value;
  } flags[] = {
      {"ip_flag_rf", r.ip_flag_rf},
      {"ip_flag_df", r.ip_flag_df},
      {"ip_flag_mf", r.ip_flag_mf},
      {"tcp_flag_cwr", r.tcp_flag_cwr},
      {"tcp_flag_ece", r.tcp_flag_ece},
      {"tcp_flag_urg", r.tcp_flag_urg},
      {"tcp_flag_ack", r.tcp_flag_ack},
      {"tcp_flag_psh", r.tcp_flag_psh},
      {"tcp_flag_rst", r.tcp_flag_rst},
      {"tcp_flag_syn", r.tcp_flag_syn},
      {"tcp_flag_fin", r.tcp_flag_fin},
      {"tcp_opt_mss_present", r.tcp_opt_mss_present},
      {"tcp_opt_wscale_present", r.tcp_opt_wscale_present},
      {"tcp_opt_sackok_present", r.tcp_opt_sackok_present},
      {"tcp_opt_ts_present", r.tcp_opt_ts_present},
  };
  for (const auto& f : flags) {
    if (f.value > 1) v.push_back(std::string(f.name) + " not in {0,1}");
  }
  if (r.ip_dscp > 63) v.push_back("ip_dscp out of range");
  if (r.ip_ecn > 3) v.push_back("ip_ecn out of range");
  if (r.ip_frag_offset > 0x1fff) v.push_back("ip_frag_offset out of range");
  if (r.tcp_reserved > 15) v.push_back("tcp_reserved out of range");
  const std::int64_t expected_payload =
      static_cast<std::int64_t>(r.ip_total_len) - 4 * static_cast<std::int64_t>(r.ip_ihl) -
      4 * static_cast<std::int64_t>(r.tcp_data_offset);
  if (expected_payload < 0 || r.payload_len != static_cast<std::uint64_t>(expected_payload))
    v.push_back("payload_len != ip_total_len - 4*ip_ihl - 4*tcp_data_offset");
  return v;
}

}  // namespace trapforge
