#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "trapforge/csv.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/flow.hpp"
#include "trapforge/ipv4.hpp"
#include "trapforge/packet.hpp"
#include "trapforge/pcap.hpp"
#include "trapforge/random.hpp"

namespace trapforge {

inline constexpr const char* kBenignLabel = "benign";

// Frames a capture contributes vs frames skipped, by reason.
struct ExtractionTally {
  std::size_t extracted = 0;
  std::size_t skipped[4] = {0, 0, 0, 0};  // indexed by SkipReason

  std::size_t skipped_total() const {
    return skipped[0] + skipped[1] + skipped[2] + skipped[3];
  }
};

inline TidyDataset dataset_from_capture(const CaptureFile& cap,
                                        const std::optional<std::string>& label = std::nullopt,
                                        ExtractionTally* tally = nullptr) {
  TidyDataset out;
  out.schema = FeatureSchema::tidy();
  out.rows.reserve(cap.frames.size());
  for (const Frame& f : cap.frames) {
    const ExtractResult res = extract_features(f.bytes, cap.link_type, f.ts_epoch_us);
    if (extract_ok(res)) {
      out.rows.push_back(std::get<PacketRecord>(res));
      out.rows.back().label = label;
      if (tally) ++tally->extracted;
    } else if (tally) {
      ++tally->skipped[static_cast<std::size_t>(std::get<SkipReason>(res))];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Salting: merge benign and attack rows into one labeled dataset with a
// deterministic seeded shuffle.

namespace detail {

inline void require_same_schema(const FeatureSchema& expected, const FeatureSchema& actual,
                                const std::string& who) {
  auto first_difference = [](const std::vector<std::string>& a, const std::vector<std::string>& b)
      -> std::optional<std::string> {
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
      if (i >= a.size()) return b[i];
      if (i >= b.size()) return a[i];
      if (a[i] != b[i]) return b[i];
    }
    return std::nullopt;
  };
  if (auto col = first_difference(expected.context, actual.context))
    throw SchemaMismatchError(*col, who + " context columns differ");
  if (auto col = first_difference(expected.intrinsic, actual.intrinsic))
    throw SchemaMismatchError(*col, who + " intrinsic columns differ");
  if (expected.label != actual.label)
    throw SchemaMismatchError(actual.label, who + " label column differs");
}

}  // namespace detail

inline TidyDataset salt(const TidyDataset& benign,
                        const std::vector<std::pair<std::string, TidyDataset>>& attacks,
                        std::uint64_t seed) {
  TidyDataset out;
  out.schema = benign.schema;
  std::size_t total = benign.rows.size();
  for (const auto& [label, dataset] : attacks) {
    detail::require_same_schema(benign.schema, dataset.schema, "attack dataset '" + label + "'");
    total += dataset.rows.size();
  }
  out.rows.reserve(total);

  for (const PacketRecord& r : benign.rows) {
    out.rows.push_back(r);
    out.rows.back().label = kBenignLabel;
  }
  for (const auto& [label, dataset] : attacks) {
    for (const PacketRecord& r : dataset.rows) {
      out.rows.push_back(r);
      out.rows.back().label = label;
    }
  }

  std::mt19937_64 rng(seed);
  seeded_shuffle(out.rows, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Reshapes.

// Stateless shape: drop the context columns, keep every row in order.
inline TidyDataset to_stateless(const TidyDataset& d) {
  TidyDataset out;
  out.schema = d.schema;
  out.schema.context.clear();
  out.rows = d.rows;
  return out;
}

// Stateful shape: one row per conversation with aggregate features.
struct FlowRecord {
  FlowKey key;
  std::uint64_t pkt_count = 0;
  std::uint64_t total_bytes = 0;  // sum of frame_len
  std::uint64_t duration_us = 0;
  double mean_interarrival_us = 0.0;
  std::uint32_t min_payload_len = 0;
  std::uint32_t max_payload_len = 0;
  std::uint64_t syn_count = 0;
  std::uint64_t fin_count = 0;
  std::uint64_t rst_count = 0;
  std::uint64_t distinct_dst_ports = 0;
  std::string label;

  bool operator==(const FlowRecord&) const = default;
};

inline constexpr std::size_t kFlowAggregateCount = 10;

inline const std::vector<std::string>& flow_csv_columns() {
  static const std::vector<std::string> cols = {
      "ip_a",        "port_a",           "ip_b",
      "port_b",      "proto",            "pkt_count",
      "total_bytes", "duration_us",      "mean_interarrival_us",
      "min_payload_len", "max_payload_len", "syn_count",
      "fin_count",   "rst_count",        "distinct_dst_ports",
      "label",
  };
  return cols;
}

// Flow label rule: any attack packet makes the flow an attack flow; with
// several attack classes in one flow the lexicographically smallest label
// wins, which keeps the result independent of row order.
inline std::vector<FlowRecord> to_stateful(const TidyDataset& d) {
  struct Partial {
    std::uint64_t pkt_count = 0;
    std::uint64_t total_bytes = 0;
    std::uint64_t min_ts = UINT64_MAX;
    std::uint64_t max_ts = 0;
    std::uint32_t min_payload = UINT32_MAX;
    std::uint32_t max_payload = 0;
    std::uint64_t syn = 0, fin = 0, rst = 0;
    std::set<std::uint16_t> dst_ports;
    std::optional<std::string> attack_label;
  };

  std::map<FlowKey, Partial> flows;  // ordered: canonical output order
  for (const PacketRecord& r : d.rows) {
    Partial& f = flows[FlowKey::of(r)];
    ++f.pkt_count;
    f.total_bytes += r.frame_len;
    f.min_ts = std::min(f.min_ts, r.ts_epoch_us);
    f.max_ts = std::max(f.max_ts, r.ts_epoch_us);
    f.min_payload = std::min(f.min_payload, r.payload_len);
    f.max_payload = std::max(f.max_payload, r.payload_len);
    f.syn += r.tcp_flag_syn;
    f.fin += r.tcp_flag_fin;
    f.rst += r.tcp_flag_rst;
    f.dst_ports.insert(r.dst_port);
    if (r.label && *r.label != kBenignLabel) {
      if (!f.attack_label || *r.label < *f.attack_label) f.attack_label = *r.label;
    }
  }

  std::vector<FlowRecord> out;
  out.reserve(flows.size());
  for (const auto& [key, f] : flows) {
    FlowRecord rec;
    rec.key = key;
    rec.pkt_count = f.pkt_count;
    rec.total_bytes = f.total_bytes;
    rec.duration_us = f.max_ts - f.min_ts;
    rec.mean_interarrival_us =
        f.pkt_count > 1 ? static_cast<double>(rec.duration_us) / static_cast<double>(f.pkt_count - 1)
                        : 0.0;
    rec.min_payload_len = f.min_payload;
    rec.max_payload_len = f.max_payload;
    rec.syn_count = f.syn;
    rec.fin_count = f.fin;
    rec.rst_count = f.rst;
    rec.distinct_dst_ports = f.dst_ports.size();
    rec.label = f.attack_label.value_or(kBenignLabel);
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Class distribution reporting.

struct ClassCount {
  std::string label;
  std::uint64_t count = 0;
  double proportion = 0.0;
  int percent = 0;  // proportion rounded to whole percent
};

struct DatasetStats {
  std::uint64_t total = 0;
  std::vector<ClassCount> classes;  // label-sorted
  std::uint64_t benign_count = 0;
  std::uint64_t attack_count = 0;  // everything not labeled benign
  int benign_percent = 0;
  int attack_percent = 0;
};

inline DatasetStats dataset_stats(const TidyDataset& d) {
  DatasetStats s;
  s.total = d.rows.size();
  std::map<std::string, std::uint64_t> counts;
  for (const PacketRecord& r : d.rows) ++counts[r.label.value_or("unlabeled")];
  for (const auto& [label, count] : counts) {
    ClassCount c;
    c.label = label;
    c.count = count;
    c.proportion = s.total ? static_cast<double>(count) / static_cast<double>(s.total) : 0.0;
    c.percent = static_cast<int>(std::llround(c.proportion * 100.0));
    s.classes.push_back(std::move(c));
    if (label == kBenignLabel)
      s.benign_count += count;
    else
      s.attack_count += count;
  }
  if (s.total) {
    s.benign_percent = static_cast<int>(
        std::llround(100.0 * static_cast<double>(s.benign_count) / static_cast<double>(s.total)));
    s.attack_percent = static_cast<int>(
        std::llround(100.0 * static_cast<double>(s.attack_count) / static_cast<double>(s.total)));
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV export / import. Column order is the schema order; IPs are dotted-quad;
// flags are 0/1; the label is the last column.

inline std::string export_csv(const TidyDataset& d) {
  std::string out;
  out.reserve(64 + d.rows.size() * 128);
  std::vector<std::string> header;
  header.reserve(d.schema.column_count());
  for (const auto& c : d.schema.context) header.push_back(c);
  for (const auto& c : d.schema.intrinsic) header.push_back(c);
  header.push_back(d.schema.label);
  csv::append_row(out, header);

  std::vector<const FeatureInfo*> columns;
  columns.reserve(header.size() - 1);
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    const FeatureInfo* info = find_feature(header[i]);
    if (!info) throw SchemaMismatchError(header[i], "unknown feature column");
    columns.push_back(info);
  }

  std::string row;
  for (const PacketRecord& r : d.rows) {
    row.clear();
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) row.push_back(',');
      const std::uint64_t v = feature_value(r, columns[i]->id);
      if (columns[i]->is_ip)
        row.append(format_ipv4(static_cast<std::uint32_t>(v)));
      else
        row.append(std::to_string(v));
    }
    row.push_back(',');
    csv::append_field(row, r.label.value_or(""));
    row.push_back('\n');
    out.append(row);
  }
  return out;
}

inline std::string export_csv(const std::vector<FlowRecord>& flows) {
  std::string out;
  csv::append_row(out, flow_csv_columns());
  for (const FlowRecord& f : flows) {
    std::string row;
    row.append(format_ipv4(f.key.ip_a));
    row.push_back(',');
    row.append(std::to_string(f.key.port_a));
    row.push_back(',');
    row.append(format_ipv4(f.key.ip_b));
    row.push_back(',');
    row.append(std::to_string(f.key.port_b));
    row.push_back(',');
    row.append(std::to_string(f.key.proto));
    row.push_back(',');
    row.append(std::to_string(f.pkt_count));
    row.push_back(',');
    row.append(std::to_string(f.total_bytes));
    row.push_back(',');
    row.append(std::to_string(f.duration_us));
    row.push_back(',');
    {
      // Shortest fixed-notation value that parses back to the same double.
      char buf[64];
      const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, f.mean_interarrival_us,
                                           std::chars_format::fixed);
      row.append(buf, end);
    }
    row.push_back(',');
    row.append(std::to_string(f.min_payload_len));
    row.push_back(',');
    row.append(std::to_string(f.max_payload_len));
    row.push_back(',');
    row.append(std::to_string(f.syn_count));
    row.push_back(',');
    row.append(std::to_string(f.fin_count));
    row.push_back(',');
    row.append(std::to_string(f.rst_count));
    row.push_back(',');
    row.append(std::to_string(f.distinct_dst_ports));
    row.push_back(',');
    csv::append_field(row, f.label);
    row.push_back('\n');
    out.append(row);
  }
  return out;
}

// Rebuilds a TidyDataset from an exported CSV. The header must consist of
// known feature columns (any subset, e.g. a stateless export) plus the label
// column last.
inline TidyDataset import_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw DataError("CSV has no header row");
  const auto& header = rows.front();
  if (header.empty() || header.back() != "label")
    throw SchemaMismatchError(header.empty() ? "" : header.back(),
                              "last CSV column must be 'label'");

  TidyDataset out;
  out.schema.context.clear();
  out.schema.intrinsic.clear();
  std::vector<const FeatureInfo*> columns;
  std::set<std::string> seen;
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    const FeatureInfo* info = find_feature(header[i]);
    if (!info) throw SchemaMismatchError(header[i], "unknown feature column");
    if (!seen.insert(header[i]).second) throw SchemaMismatchError(header[i], "duplicate column");
    columns.push_back(info);
    if (static_cast<std::size_t>(info->id) < kContextFeatureCount)
      out.schema.context.push_back(header[i]);
    else
      out.schema.intrinsic.push_back(header[i]);
  }

  out.rows.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r];
    if (fields.size() != header.size())
      throw DataError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(header.size()));
    PacketRecord rec;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const std::string& field = fields[i];
      std::uint64_t v = 0;
      if (columns[i]->is_ip) {
        const auto ip = parse_ipv4(field);
        if (!ip)
          throw DataError("CSV row " + std::to_string(r + 1) + ": bad IP '" + field + "' in " +
                          columns[i]->name);
        v = *ip;
      } else {
        const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc{} || end != field.data() + field.size())
          throw DataError("CSV row " + std::to_string(r + 1) + ": bad integer '" + field + "' in " +
                          columns[i]->name);
      }
      set_feature(rec, columns[i]->id, v);
    }
    const std::string& label = fields.back();
    if (!label.empty()) rec.label = label;
    out.rows.push_back(std::move(rec));
  }
  return out;
}

inline void export_csv_file(const std::filesystem::path& path, const TidyDataset& d) {
  csv::write_text_file(path, export_csv(d));
}

inline void export_csv_file(const std::filesystem::path& path, const std::vector<FlowRecord>& flows) {
  csv::write_text_file(path, export_csv(flows));
}

inline TidyDataset import_csv_file(const std::filesystem::path& path) {
  return import_csv(csv::read_text_file(path));
}

}  // namespace trapforge
