#include <catch_amalgamated.hpp>

#include <cstdint>
#include <random>
#include <vector>

#include "trapforge/packet.hpp"

using namespace trapforge;

namespace {

// Ethernet II + IPv4 + TCP SYN, 54 bytes, no options, no payload.
// 10.0.0.1:40000 -> 10.0.0.2:80, ttl 64, seq 7, window 1024.
std::vector<std::uint8_t> syn_frame() {
  return {
      // Ethernet
      0x02, 0x54, 0x0a, 0x00, 0x00, 0x02,  // dst mac
      0x02, 0x54, 0x0a, 0x00, 0x00, 0x01,  // src mac
      0x08, 0x00,                          // ethertype IPv4
      // IPv4
      0x45, 0x00,              // version 4, ihl 5, dscp 0, ecn 0
      0x00, 0x28,              // total length 40
      0x12, 0x34,              // id
      0x40, 0x00,              // DF, fragment offset 0
      0x40,                    // ttl 64
      0x06,                    // protocol TCP
      0xb1, 0xe6,              // header checksum (as-on-wire value)
      0x0a, 0x00, 0x00, 0x01,  // src 10.0.0.1
      0x0a, 0x00, 0x00, 0x02,  // dst 10.0.0.2
      // TCP
      0x9c, 0x40,              // src port 40000
      0x00, 0x50,              // dst port 80
      0x00, 0x00, 0x00, 0x07,  // seq 7
      0x00, 0x00, 0x00, 0x00,  // ack 0
      0x50, 0x02,              // data offset 5, flags SYN
      0x04, 0x00,              // window 1024
      0xbe, 0xef,              // checksum (as-on-wire value)
      0x00, 0x00,              // urgent pointer
  };
}

PacketRecord must_extract(const std::vector<std::uint8_t>& frame, LinkType link = LinkType::ethernet,
                          std::uint64_t ts = 0) {
  const ExtractResult res = extract_features(frame, link, ts);
  REQUIRE(extract_ok(res));
  return std::get<PacketRecord>(res);
}

SkipReason must_skip(const std::vector<std::uint8_t>& frame, LinkType link = LinkType::ethernet) {
  const ExtractResult res = extract_features(frame, link, 0);
  REQUIRE_FALSE(extract_ok(res));
  return std::get<SkipReason>(res);
}

}  // namespace

TEST_CASE("extracts every field of a plain SYN frame") {
  const PacketRecord r = must_extract(syn_frame(), LinkType::ethernet, 1'700'000'000'000'123);

  CHECK(r.ts_epoch_us == 1'700'000'000'000'123);
  CHECK(r.src_ip == 0x0a000001);
  CHECK(r.dst_ip == 0x0a000002);
  CHECK(r.src_port == 40000);
  CHECK(r.dst_port == 80);
  CHECK(r.ip_proto == 6);

  CHECK(r.frame_len == 54);
  CHECK(r.ip_version == 4);
  CHECK(r.ip_ihl == 5);
  CHECK(r.ip_dscp == 0);
  CHECK(r.ip_ecn == 0);
  CHECK(r.ip_total_len == 40);
  CHECK(r.ip_id == 0x1234);
  CHECK(r.ip_flag_rf == 0);
  CHECK(r.ip_flag_df == 1);
  CHECK(r.ip_flag_mf == 0);
  CHECK(r.ip_frag_offset == 0);
  CHECK(r.ip_ttl == 64);
  CHECK(r.ip_checksum == 0xb1e6);

  CHECK(r.tcp_seq == 7);
  CHECK(r.tcp_ack == 0);
  CHECK(r.tcp_data_offset == 5);
  CHECK(r.tcp_reserved == 0);
  CHECK(r.tcp_flag_cwr == 0);
  CHECK(r.tcp_flag_ece == 0);
  CHECK(r.tcp_flag_urg == 0);
  CHECK(r.tcp_flag_ack == 0);
  CHECK(r.tcp_flag_psh == 0);
  CHECK(r.tcp_flag_rst == 0);
  CHECK(r.tcp_flag_syn == 1);
  CHECK(r.tcp_flag_fin == 0);
  CHECK(r.tcp_window == 1024);
  CHECK(r.tcp_checksum == 0xbeef);
  CHECK(r.tcp_urgent_ptr == 0);

  CHECK(r.tcp_opt_mss_present == 0);
  CHECK(r.tcp_opt_mss == 0);
  CHECK(r.tcp_opt_wscale_present == 0);
  CHECK(r.tcp_opt_sackok_present == 0);
  CHECK(r.tcp_opt_ts_present == 0);
  CHECK(r.payload_len == 0);

  CHECK(validate_record(r).empty());
}

TEST_CASE("extraction is deterministic") {
  const auto frame = syn_frame();
  CHECK(must_extract(frame) == must_extract(frame));
}

TEST_CASE("a single 802.1Q tag is stepped over") {
  auto frame = syn_frame();
  const std::vector<std::uint8_t> tag = {0x81, 0x00, 0x00, 0x05};
  frame.insert(frame.begin() + 12, tag.begin(), tag.end());
  const PacketRecord r = must_extract(frame);
  CHECK(r.src_ip == 0x0a000001);
  CHECK(r.dst_port == 80);
  CHECK(r.frame_len == 58);
}

TEST_CASE("raw IP link type starts at byte zero") {
  auto frame = syn_frame();
  frame.erase(frame.begin(), frame.begin() + 14);
  const PacketRecord r = must_extract(frame, LinkType::raw_ip);
  CHECK(r.src_port == 40000);
  CHECK(r.frame_len == 40);
}

TEST_CASE("non-TCP and non-IPv4 frames are skipped with the right reason") {
  SECTION("UDP") {
    auto frame = syn_frame();
    frame[14 + 9] = 17;
    CHECK(must_skip(frame) == SkipReason::not_tcp);
  }
  SECTION("ARP ethertype") {
    auto frame = syn_frame();
    frame[12] = 0x08;
    frame[13] = 0x06;
    CHECK(must_skip(frame) == SkipReason::not_ipv4);
  }
  SECTION("IPv6 version nibble") {
    auto frame = syn_frame();
    frame[14] = 0x65;
    CHECK(must_skip(frame) == SkipReason::not_ipv4);
  }
  SECTION("non-first fragment carries no TCP header") {
    auto frame = syn_frame();
    frame[14 + 6] = 0x00;
    frame[14 + 7] = 0x08;  // fragment offset 8
    CHECK(must_skip(frame) == SkipReason::not_tcp);
  }
}

TEST_CASE("truncation anywhere yields truncated") {
  const auto frame = syn_frame();
  SECTION("mid-ethernet") {
    std::vector<std::uint8_t> cut(frame.begin(), frame.begin() + 10);
    CHECK(must_skip(cut) == SkipReason::truncated);
  }
  SECTION("mid-IP") {
    std::vector<std::uint8_t> cut(frame.begin(), frame.begin() + 30);
    CHECK(must_skip(cut) == SkipReason::truncated);
  }
  SECTION("mid-TCP") {
    std::vector<std::uint8_t> cut(frame.begin(), frame.begin() + 44);
    CHECK(must_skip(cut) == SkipReason::truncated);
  }
}

TEST_CASE("bad header lengths yield malformed_header") {
  SECTION("ihl below 5") {
    auto frame = syn_frame();
    frame[14] = 0x44;
    CHECK(must_skip(frame) == SkipReason::malformed_header);
  }
  SECTION("data offset below 5") {
    auto frame = syn_frame();
    frame[14 + 20 + 12] = 0x40;
    CHECK(must_skip(frame) == SkipReason::malformed_header);
  }
  SECTION("total length smaller than the headers") {
    auto frame = syn_frame();
    frame[14 + 2] = 0x00;
    frame[14 + 3] = 0x20;  // total 32 < 40
    CHECK(must_skip(frame) == SkipReason::malformed_header);
  }
}

TEST_CASE("payload length follows the header arithmetic") {
  auto frame = syn_frame();
  frame[14 + 2] = 0x00;
  frame[14 + 3] = 0x2d;  // total 45: 5 payload bytes announced
  const PacketRecord r = must_extract(frame);
  CHECK(r.payload_len == 5);
  CHECK(validate_record(r).empty());
}

TEST_CASE("TCP options are decoded and padding is tolerated") {
  auto frame = syn_frame();
  // Grow the TCP header to 40 bytes: MSS, NOP, WSCALE, SACKOK, TS.
  const std::vector<std::uint8_t> options = {
      2, 4, 0x05, 0xb4,                  // MSS 1460
      1,                                 // NOP
      3, 3, 7,                           // window scale 7
      4, 2,                              // SACK permitted
      8, 10, 0, 0, 0, 1, 0, 0, 0, 0,     // timestamps
  };
  frame.insert(frame.end(), options.begin(), options.end());
  frame[14 + 20 + 12] = 0xa0;  // data offset 10
  frame[14 + 2] = 0x00;
  frame[14 + 3] = 0x3c;  // total length 60

  const PacketRecord r = must_extract(frame);
  CHECK(r.tcp_data_offset == 10);
  CHECK(r.tcp_opt_mss_present == 1);
  CHECK(r.tcp_opt_mss == 1460);
  CHECK(r.tcp_opt_wscale_present == 1);
  CHECK(r.tcp_opt_wscale == 7);
  CHECK(r.tcp_opt_sackok_present == 1);
  CHECK(r.tcp_opt_ts_present == 1);
  CHECK(r.payload_len == 0);
  CHECK(validate_record(r).empty());
}

TEST_CASE("a zero-length option TLV stops option parsing without failing") {
  auto frame = syn_frame();
  const std::vector<std::uint8_t> options = {2, 0, 0, 0};  // MSS with impossible length
  frame.insert(frame.end(), options.begin(), options.end());
  frame[14 + 20 + 12] = 0x60;  // data offset 6
  frame[14 + 2] = 0x00;
  frame[14 + 3] = 0x2c;  // total length 44

  const PacketRecord r = must_extract(frame);
  CHECK(r.tcp_opt_mss_present == 0);
  CHECK(r.payload_len == 0);
}

TEST_CASE("validate_record flags out-of-domain values") {
  PacketRecord r = must_extract(syn_frame());
  REQUIRE(validate_record(r).empty());

  SECTION("flag above 1") {
    r.tcp_flag_syn = 2;
    const auto v = validate_record(r);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "tcp_flag_syn not in {0,1}");
  }
  SECTION("broken payload identity") {
    r.payload_len = 99;
    CHECK(validate_record(r).size() == 1);
  }
  SECTION("wrong version") {
    r.ip_version = 6;
    CHECK(validate_record(r).size() == 1);
  }
}

TEST_CASE("feature catalog covers the schema exactly") {
  CHECK(kFeatureCount == 41);
  const FeatureSchema tidy = FeatureSchema::tidy();
  CHECK(tidy.context.size() == 6);
  CHECK(tidy.intrinsic.size() == 35);
  CHECK(tidy.column_count() == 42);  // 41 features + label
  CHECK(FeatureSchema::stateless().column_count() == 36);

  for (const auto& name : tidy.context) CHECK(find_feature(name) != nullptr);
  for (const auto& name : tidy.intrinsic) CHECK(find_feature(name) != nullptr);
  CHECK(find_feature("no_such_column") == nullptr);
}

TEST_CASE("feature get/set round-trips every column") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    PacketRecord r;
    for (const FeatureInfo& f : kFeatureCatalog) {
      const std::uint64_t v = rng() & 0xff;  // fits every field type
      set_feature(r, f.id, v);
      CHECK(feature_value(r, f.id) == v);
    }
  }
}

TEST_CASE("internet checksum matches the textbook IPv4 example") {
  // Classic worked example: header with checksum zeroed sums to 0xb861, and
  // re-summing with 0xb861 in place gives 0.
  const std::vector<std::uint8_t> header = {0x45, 0x00, 0x00, 0x73, 0x00, 0x00, 0x40,
                                            0x00, 0x40, 0x11, 0x00, 0x00, 0xc0, 0xa8,
                                            0x00, 0x01, 0xc0, 0xa8, 0x00, 0xc7};
  CHECK(internet_checksum(header) == 0xb861);

  auto with_sum = header;
  with_sum[10] = 0xb8;
  with_sum[11] = 0x61;
  CHECK(internet_checksum(with_sum) == 0x0000);
}

TEST_CASE("checksum agrees with a straightforward reference sum") {
  auto reference = [](const std::vector<std::uint8_t>& data) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i < data.size(); i += 2) {
      std::uint16_t word = static_cast<std::uint16_t>(data[i] << 8);
      if (i + 1 < data.size()) word = static_cast<std::uint16_t>(word | data[i + 1]);
      sum += word;
      while (sum > 0xffff) sum = (sum & 0xffff) + (sum >> 16);
    }
    return static_cast<std::uint16_t>(~sum & 0xffff);
  };
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> data(1 + rng() % 64);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    CHECK(internet_checksum(data) == reference(data));
  }
}
