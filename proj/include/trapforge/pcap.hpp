#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "trapforge/byteio.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/packet.hpp"

namespace trapforge {

// Classic pcap only. pcapng and nanosecond variants are rejected with a
// message naming the format.
inline constexpr std::uint32_t kPcapMagicLe = 0xa1b2c3d4;       // usec, file-native order
inline constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;  // usec, opposite order
inline constexpr std::uint32_t kPcapMagicNano = 0xa1b23c4d;
inline constexpr std::uint32_t kPcapMagicNanoSwapped = 0x4d3cb2a1;
inline constexpr std::uint32_t kPcapngMagic = 0x0a0d0d0a;
inline constexpr std::uint32_t kPcapSnapLen = 65535;
inline constexpr std::size_t kPcapGlobalHeaderLen = 24;
inline constexpr std::size_t kPcapRecordHeaderLen = 16;

struct Frame {
  std::uint64_t ts_epoch_us = 0;
  std::vector<std::uint8_t> bytes;
  // Original on-wire length; equals bytes.size() unless the capture was snapped.
  std::uint32_t orig_len = 0;

  bool operator==(const Frame&) const = default;
};

struct CaptureFile {
  LinkType link_type = LinkType::ethernet;
  std::vector<Frame> frames;

  bool operator==(const CaptureFile&) const = default;

  void add_frame(std::uint64_t ts_us, std::vector<std::uint8_t> bytes) {
    Frame f;
    f.ts_epoch_us = ts_us;
    f.orig_len = static_cast<std::uint32_t>(bytes.size());
    f.bytes = std::move(bytes);
    frames.push_back(std::move(f));
  }
};

inline CaptureFile read_pcap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw UnsupportedFormatError("not a pcap stream: shorter than a magic number");
  const std::uint32_t magic = byteio::rd_le32(bytes, 0);
  if (magic == kPcapngMagic) throw UnsupportedFormatError("pcapng is not supported, classic pcap only");
  if (magic == kPcapMagicNano || magic == kPcapMagicNanoSwapped)
    throw UnsupportedFormatError("nanosecond pcap is not supported, classic microsecond pcap only");
  bool little_endian;
  if (magic == kPcapMagicLe)
    little_endian = true;
  else if (magic == kPcapMagicSwapped)
    little_endian = false;
  else
    throw UnsupportedFormatError("unknown capture magic, classic pcap only");

  if (bytes.size() < kPcapGlobalHeaderLen) throw UnsupportedFormatError("truncated pcap global header");

  auto rd32 = [&](std::size_t off) {
    return little_endian ? byteio::rd_le32(bytes, off) : byteio::rd_be32(bytes, off);
  };

  CaptureFile out;
  out.link_type = static_cast<LinkType>(rd32(20));

  std::size_t off = kPcapGlobalHeaderLen;
  std::size_t index = 0;
  while (off < bytes.size()) {
    if (bytes.size() - off < kPcapRecordHeaderLen)
      throw CorruptRecordError(index, "record header exceeds remaining bytes");
    const std::uint32_t ts_sec = rd32(off);
    const std::uint32_t ts_usec = rd32(off + 4);
    const std::uint32_t incl_len = rd32(off + 8);
    const std::uint32_t orig_len = rd32(off + 12);
    off += kPcapRecordHeaderLen;
    if (bytes.size() - off < incl_len)
      throw CorruptRecordError(index, "captured length exceeds remaining bytes");
    Frame f;
    f.ts_epoch_us = std::uint64_t{ts_sec} * 1'000'000 + ts_usec;
    f.bytes.assign(bytes.begin() + off, bytes.begin() + off + incl_len);
    f.orig_len = orig_len;
    out.frames.push_back(std::move(f));
    off += incl_len;
    ++index;
  }
  return out;
}

// Always writes little-endian, microsecond magic, version 2.4, snaplen 65535.
inline std::vector<std::uint8_t> write_pcap(const CaptureFile& c) {
  std::vector<std::uint8_t> out;
  out.reserve(kPcapGlobalHeaderLen + c.frames.size() * 80);
  byteio::wr_le32(out, kPcapMagicLe);
  byteio::wr_le16(out, 2);  // version major
  byteio::wr_le16(out, 4);  // version minor
  byteio::wr_le32(out, 0);  // thiszone
  byteio::wr_le32(out, 0);  // sigfigs
  byteio::wr_le32(out, kPcapSnapLen);
  byteio::wr_le32(out, static_cast<std::uint32_t>(c.link_type));
  for (const Frame& f : c.frames) {
    if (f.bytes.size() > kPcapSnapLen)
      throw FrameTooLargeError("frame of " + std::to_string(f.bytes.size()) + " bytes exceeds snaplen " +
                               std::to_string(kPcapSnapLen));
    const std::uint32_t orig = f.orig_len ? f.orig_len : static_cast<std::uint32_t>(f.bytes.size());
    byteio::wr_le32(out, static_cast<std::uint32_t>(f.ts_epoch_us / 1'000'000));
    byteio::wr_le32(out, static_cast<std::uint32_t>(f.ts_epoch_us % 1'000'000));
    byteio::wr_le32(out, static_cast<std::uint32_t>(f.bytes.size()));
    byteio::wr_le32(out, orig);
    out.insert(out.end(), f.bytes.begin(), f.bytes.end());
  }
  return out;
}

inline CaptureFile read_pcap_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_pcap(bytes);
}

inline void write_pcap_file(const std::filesystem::path& path, const CaptureFile& c) {
  const auto bytes = write_pcap(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace trapforge
