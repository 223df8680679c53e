#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "trapforge/errors.hpp"
#include "trapforge/flow.hpp"
#include "trapforge/ipv4.hpp"
#include "trapforge/packet.hpp"
#include "trapforge/random.hpp"

namespace trapforge {

enum class Taxonomy { anomalous, suspicious, notice, benign };

inline const char* taxonomy_name(Taxonomy t) {
  switch (t) {
    case Taxonomy::anomalous: return "anomalous";
    case Taxonomy::suspicious: return "suspicious";
    case Taxonomy::notice: return "notice";
    case Taxonomy::benign: return "benign";
  }
  return "?";
}

inline std::optional<Taxonomy> parse_taxonomy(std::string_view text) {
  if (text == "anomalous") return Taxonomy::anomalous;
  if (text == "suspicious") return Taxonomy::suspicious;
  if (text == "notice") return Taxonomy::notice;
  if (text == "benign") return Taxonomy::benign;
  return std::nullopt;
}

// Wildcarded 5-tuple pattern; empty fields in the CSV are wildcards.
struct AnomalyDescriptor {
  Taxonomy taxonomy = Taxonomy::anomalous;
  std::optional<std::uint32_t> src_ip;
  std::optional<std::uint32_t> dst_ip;
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;
  std::optional<std::uint8_t> proto;

  bool all_wildcard() const {
    return !src_ip && !dst_ip && !src_port && !dst_port && !proto;
  }
};

struct LabelSet {
  std::vector<AnomalyDescriptor> descriptors;
  std::string source;
};

inline constexpr const char* kLabelCsvHeader = "taxonomy,src_ip,src_port,dst_ip,dst_port,proto";

// Canonical label CSV: one descriptor per non-comment line, '#' comments,
// header line optional. Field order matches kLabelCsvHeader.
inline LabelSet parse_label_file(std::string_view text, std::string source = {}) {
  LabelSet out;
  out.source = std::move(source);

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (line == kLabelCsvHeader) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 6)
      throw BadLineError(line_no, "expected 6 fields, got " + std::to_string(fields.size()));

    AnomalyDescriptor d;
    const auto taxonomy = parse_taxonomy(fields[0]);
    if (!taxonomy) throw BadLineError(line_no, "invalid taxonomy '" + std::string(fields[0]) + "'");
    d.taxonomy = *taxonomy;

    auto parse_ip_field = [&](std::string_view f, const char* what) -> std::optional<std::uint32_t> {
      if (f.empty()) return std::nullopt;
      const auto ip = parse_ipv4(f);
      if (!ip) throw BadLineError(line_no, std::string("invalid IP in ") + what + " field");
      return ip;
    };
    auto parse_int_field = [&](std::string_view f, std::uint32_t max,
                               const char* what) -> std::optional<std::uint32_t> {
      if (f.empty()) return std::nullopt;
      std::uint32_t v = 0;
      const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc{} || end != f.data() + f.size() || v > max)
        throw BadLineError(line_no, std::string("invalid ") + what + " '" + std::string(f) + "'");
      return v;
    };

    d.src_ip = parse_ip_field(fields[1], "src_ip");
    if (const auto v = parse_int_field(fields[2], 65535, "src_port"))
      d.src_port = static_cast<std::uint16_t>(*v);
    d.dst_ip = parse_ip_field(fields[3], "dst_ip");
    if (const auto v = parse_int_field(fields[4], 65535, "dst_port"))
      d.dst_port = static_cast<std::uint16_t>(*v);
    if (const auto v = parse_int_field(fields[5], 255, "proto"))
      d.proto = static_cast<std::uint8_t>(*v);

    if (d.all_wildcard()) throw BadLineError(line_no, "descriptor needs at least one non-wildcard field");
    out.descriptors.push_back(d);
  }
  return out;
}

// True iff every non-wildcard descriptor field equals the packet's
// corresponding context field.
inline bool matches(const AnomalyDescriptor& d, const PacketRecord& p) {
  if (d.src_ip && *d.src_ip != p.src_ip) return false;
  if (d.dst_ip && *d.dst_ip != p.dst_ip) return false;
  if (d.src_port && *d.src_port != p.src_port) return false;
  if (d.dst_port && *d.dst_port != p.dst_port) return false;
  if (d.proto && *d.proto != p.ip_proto) return false;
  return true;
}

struct FilterReport {
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
  std::size_t removed_count = 0;
  // Removal counts per descriptor, aligned with the LabelSet. A removed
  // packet is counted once per removing descriptor that matched it.
  std::vector<std::size_t> per_descriptor;
};

struct FilterResult {
  std::vector<PacketRecord> kept;
  std::vector<PacketRecord> removed;
  FilterReport report;
};

// Removes packets matching any anomalous or suspicious descriptor; notice and
// benign descriptors never remove (unless remove_notice widens the rule to
// notice as well).
inline FilterResult filter_benign(const std::vector<PacketRecord>& packets, const LabelSet& labels,
                                  bool remove_notice = false) {
  auto removing = [&](Taxonomy t) {
    return t == Taxonomy::anomalous || t == Taxonomy::suspicious ||
           (remove_notice && t == Taxonomy::notice);
  };
  FilterResult out;
  out.report.input_count = packets.size();
  out.report.per_descriptor.assign(labels.descriptors.size(), 0);
  for (const PacketRecord& p : packets) {
    bool remove = false;
    for (std::size_t i = 0; i < labels.descriptors.size(); ++i) {
      const AnomalyDescriptor& d = labels.descriptors[i];
      if (!removing(d.taxonomy)) continue;
      if (matches(d, p)) {
        remove = true;
        ++out.report.per_descriptor[i];
      }
    }
    if (remove)
      out.removed.push_back(p);
    else
      out.kept.push_back(p);
  }
  out.report.kept_count = out.kept.size();
  out.report.removed_count = out.removed.size();
  return out;
}

enum class SampleMode { stateless, stateful };

struct SampleTarget {
  enum class Kind { count, ratio } kind = Kind::count;
  std::uint64_t count = 0;
  double ratio = 0.0;

  static SampleTarget of_count(std::uint64_t c) { return {Kind::count, c, 0.0}; }
  static SampleTarget of_ratio(double r) { return {Kind::ratio, 0, r}; }
};

namespace detail {

inline std::uint64_t resolve_target(const SampleTarget& target, std::size_t population) {
  if (target.kind == SampleTarget::Kind::count) {
    if (target.count > population)
      throw TargetTooLargeError("sample count " + std::to_string(target.count) +
                                " exceeds population " + std::to_string(population));
    return target.count;
  }
  if (target.ratio <= 0.0) throw ConfigError("sample ratio must be in (0,1]");
  if (target.ratio > 1.0)
    throw TargetTooLargeError("sample ratio " + std::to_string(target.ratio) + " exceeds 1.0");
  return static_cast<std::uint64_t>(std::llround(target.ratio * static_cast<double>(population)));
}

}  // namespace detail

// Stateless mode draws a uniform sample without replacement, preserving the
// population's order. Stateful mode draws whole 5-tuple conversations (both
// directions together): groups are taken until the target is reached, and the
// group that first crosses it is kept whole, never split.
inline std::vector<PacketRecord> sample_packets(const std::vector<PacketRecord>& packets,
                                                const SampleTarget& target, std::uint64_t seed,
                                                SampleMode mode) {
  const std::uint64_t want = detail::resolve_target(target, packets.size());
  if (want == packets.size()) return packets;  // identity sample, original order

  std::mt19937_64 rng(seed);
  if (mode == SampleMode::stateless) {
    const auto indices = sample_indices(rng, packets.size(), static_cast<std::size_t>(want));
    std::vector<PacketRecord> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(packets[i]);
    return out;
  }

  // Group packet indices by conversation, first-appearance order.
  std::unordered_map<FlowKey, std::size_t, FlowKeyHash> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const FlowKey key = FlowKey::of(packets[i]);
    const auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  seeded_shuffle(order, rng);

  std::vector<bool> selected(packets.size(), false);
  std::uint64_t taken = 0;
  for (std::size_t g : order) {
    if (taken >= want) break;
    for (std::size_t i : groups[g]) selected[i] = true;
    taken += groups[g].size();
  }

  std::vector<PacketRecord> out;
  out.reserve(static_cast<std::size_t>(taken));
  for (std::size_t i = 0; i < packets.size(); ++i) {
    if (selected[i]) out.push_back(packets[i]);
  }
  return out;
}

}  // namespace trapforge
