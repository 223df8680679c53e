#include <catch_amalgamated.hpp>

#include <cstdint>
#include <random>
#include <vector>

#include "trapforge/byteio.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/pcap.hpp"

using namespace trapforge;

namespace {

CaptureFile random_capture(std::mt19937_64& rng, std::size_t frame_count) {
  CaptureFile c;
  c.link_type = rng() % 2 ? LinkType::ethernet : LinkType::raw_ip;
  for (std::size_t i = 0; i < frame_count; ++i) {
    std::vector<std::uint8_t> bytes(rng() % 200);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    // Keep seconds within 32 bits, the classic header's timestamp field.
    const std::uint64_t ts = (rng() % 4'000'000'000ULL) * 1'000'000 + rng() % 1'000'000;
    c.add_frame(ts, std::move(bytes));
  }
  return c;
}

// A classic pcap assembled by hand in big-endian order, one 4-byte frame.
std::vector<std::uint8_t> big_endian_pcap() {
  std::vector<std::uint8_t> out;
  byteio::wr_be32(out, 0xa1b2c3d4);
  byteio::wr_be16(out, 2);
  byteio::wr_be16(out, 4);
  byteio::wr_be32(out, 0);
  byteio::wr_be32(out, 0);
  byteio::wr_be32(out, 65535);
  byteio::wr_be32(out, 1);  // ethernet
  byteio::wr_be32(out, 1000);  // ts sec
  byteio::wr_be32(out, 42);    // ts usec
  byteio::wr_be32(out, 4);     // captured
  byteio::wr_be32(out, 60);    // original
  out.insert(out.end(), {0xde, 0xad, 0xbe, 0xef});
  return out;
}

}  // namespace

TEST_CASE("write then read is the identity on random captures") {
  std::mt19937_64 rng(20240521);
  for (int trial = 0; trial < 20; ++trial) {
    const CaptureFile original = random_capture(rng, 1 + rng() % 100);
    CHECK(read_pcap(write_pcap(original)) == original);
  }
}

TEST_CASE("a thousand-frame capture survives a file round-trip") {
  std::mt19937_64 rng(7);
  const CaptureFile original = random_capture(rng, 1000);
  const auto path = std::filesystem::temp_directory_path() / "trapforge_test_roundtrip.pcap";
  write_pcap_file(path, original);
  CHECK(read_pcap_file(path) == original);
  std::filesystem::remove(path);
}

TEST_CASE("an empty capture is 24 bytes and reads back empty") {
  const CaptureFile empty{LinkType::ethernet, {}};
  const auto bytes = write_pcap(empty);
  CHECK(bytes.size() == 24);
  const CaptureFile back = read_pcap(bytes);
  CHECK(back.frames.empty());
  CHECK(back.link_type == LinkType::ethernet);
}

TEST_CASE("the writer emits the little-endian microsecond layout") {
  CaptureFile c{LinkType::raw_ip, {}};
  c.add_frame(3'000'001, {0xaa, 0xbb});
  const auto bytes = write_pcap(c);
  CHECK(byteio::rd_le32(bytes, 0) == 0xa1b2c3d4);
  CHECK(byteio::rd_le16(bytes, 4) == 2);
  CHECK(byteio::rd_le16(bytes, 6) == 4);
  CHECK(byteio::rd_le32(bytes, 16) == 65535);
  CHECK(byteio::rd_le32(bytes, 20) == 101);
  CHECK(byteio::rd_le32(bytes, 24) == 3);  // seconds
  CHECK(byteio::rd_le32(bytes, 28) == 1);  // microseconds
  CHECK(byteio::rd_le32(bytes, 32) == 2);  // captured length
  CHECK(byteio::rd_le32(bytes, 36) == 2);  // original length
}

TEST_CASE("big-endian files read correctly") {
  const CaptureFile c = read_pcap(big_endian_pcap());
  CHECK(c.link_type == LinkType::ethernet);
  REQUIRE(c.frames.size() == 1);
  CHECK(c.frames[0].ts_epoch_us == 1'000'000'042);
  CHECK(c.frames[0].bytes == std::vector<std::uint8_t>({0xde, 0xad, 0xbe, 0xef}));
  CHECK(c.frames[0].orig_len == 60);
}

TEST_CASE("snapped frames keep their original length through a round-trip") {
  CaptureFile c{LinkType::ethernet, {}};
  Frame f;
  f.ts_epoch_us = 5;
  f.bytes = {1, 2, 3};
  f.orig_len = 1500;  // capture was cut short
  c.frames.push_back(f);
  const CaptureFile back = read_pcap(write_pcap(c));
  CHECK(back.frames[0].orig_len == 1500);
  CHECK(back.frames[0].bytes.size() == 3);
}

TEST_CASE("unsupported formats are named in the error") {
  SECTION("pcapng") {
    std::vector<std::uint8_t> bytes;
    byteio::wr_le32(bytes, 0x0a0d0d0a);
    bytes.resize(32, 0);
    CHECK_THROWS_WITH(read_pcap(bytes), Catch::Matchers::ContainsSubstring("pcapng"));
  }
  SECTION("nanosecond pcap, either byte order") {
    for (const std::uint32_t magic : {0xa1b23c4dU, 0x4d3cb2a1U}) {
      std::vector<std::uint8_t> bytes;
      byteio::wr_le32(bytes, magic);
      bytes.resize(24, 0);
      CHECK_THROWS_WITH(read_pcap(bytes), Catch::Matchers::ContainsSubstring("nanosecond"));
    }
  }
  SECTION("arbitrary junk") {
    const std::vector<std::uint8_t> bytes = {0x13, 0x37, 0x13, 0x37, 0, 0, 0, 0};
    CHECK_THROWS_AS(read_pcap(bytes), UnsupportedFormatError);
  }
  SECTION("empty input") {
    CHECK_THROWS_AS(read_pcap(std::vector<std::uint8_t>{}), UnsupportedFormatError);
  }
}

TEST_CASE("corrupt records report their index") {
  std::mt19937_64 rng(3);
  CaptureFile c = random_capture(rng, 3);
  auto bytes = write_pcap(c);

  SECTION("record body cut off") {
    bytes.resize(bytes.size() - 1);
    try {
      read_pcap(bytes);
      FAIL("expected CorruptRecordError");
    } catch (const CorruptRecordError& e) {
      CHECK(e.record_index() == 2);
    }
  }
  SECTION("declared length runs past the file") {
    // Patch record 0's captured length to something enormous.
    const std::size_t incl_off = 24 + 8;
    bytes[incl_off] = 0xff;
    bytes[incl_off + 1] = 0xff;
    bytes[incl_off + 2] = 0xff;
    bytes[incl_off + 3] = 0x0f;
    try {
      read_pcap(bytes);
      FAIL("expected CorruptRecordError");
    } catch (const CorruptRecordError& e) {
      CHECK(e.record_index() == 0);
    }
  }
}

TEST_CASE("frames beyond the snap length are refused at write time") {
  CaptureFile c{LinkType::ethernet, {}};
  c.add_frame(0, std::vector<std::uint8_t>(65536, 0xab));
  CHECK_THROWS_AS(write_pcap(c), FrameTooLargeError);
}

TEST_CASE("missing files raise IoError") {
  CHECK_THROWS_AS(read_pcap_file("/nonexistent/definitely_missing.pcap"), IoError);
}
