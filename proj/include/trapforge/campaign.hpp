#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapforge/control.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/ipv4.hpp"
#include "trapforge/packet.hpp"
#include "trapforge/pcap.hpp"
#include "trapforge/random.hpp"

namespace trapforge {

// TCP flag bits, header byte 13.
inline constexpr std::uint8_t kTcpFin = 0x01;
inline constexpr std::uint8_t kTcpSyn = 0x02;
inline constexpr std::uint8_t kTcpRst = 0x04;
inline constexpr std::uint8_t kTcpPsh = 0x08;
inline constexpr std::uint8_t kTcpAck = 0x10;
inline constexpr std::uint8_t kTcpUrg = 0x20;

// A scan technique is the exact flag combination each probe carries. connect
// is the exception: it models a full handshake attempt, so one port gets the
// attacker-side sequence SYN, ACK, RST|ACK.
struct ScanTechnique {
  std::string id;
  std::vector<std::uint8_t> probe_flags;  // per-port frame sequence
  bool with_mss = false;                  // SYN probes advertise an MSS option
};

inline const std::vector<ScanTechnique>& technique_catalog() {
  static const std::vector<ScanTechnique> catalog = {
      {"syn", {kTcpSyn}, true},
      {"fin", {kTcpFin}, false},
      {"null", {0x00}, false},
      {"xmas", {static_cast<std::uint8_t>(kTcpFin | kTcpPsh | kTcpUrg)}, false},
      {"ack", {kTcpAck}, false},
      {"maimon", {static_cast<std::uint8_t>(kTcpFin | kTcpAck)}, false},
      {"window", {kTcpAck}, false},
      {"connect",
       {kTcpSyn, kTcpAck, static_cast<std::uint8_t>(kTcpRst | kTcpAck)},
       true},
  };
  return catalog;
}

inline const ScanTechnique* find_technique(std::string_view id) {
  for (const auto& t : technique_catalog()) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

namespace detail {

inline void append_mac_for_ip(std::vector<std::uint8_t>& out, std::uint32_t ip) {
  out.push_back(0x02);  // locally administered
  out.push_back(0x54);
  out.push_back(static_cast<std::uint8_t>(ip >> 24));
  out.push_back(static_cast<std::uint8_t>(ip >> 16));
  out.push_back(static_cast<std::uint8_t>(ip >> 8));
  out.push_back(static_cast<std::uint8_t>(ip));
}

struct ProbeParams {
  std::uint32_t src_ip = 0;
  std::uint32_t dst_ip = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 1024;
  std::optional<std::uint16_t> mss;
};

// Ethernet II + IPv4 + TCP, no payload, checksums filled in.
inline std::vector<std::uint8_t> build_probe_frame(const ProbeParams& p, std::uint16_t ip_id) {
  std::vector<std::uint8_t> frame;
  const std::size_t tcp_len = p.mss ? 24 : 20;
  frame.reserve(14 + 20 + tcp_len);

  append_mac_for_ip(frame, p.dst_ip);
  append_mac_for_ip(frame, p.src_ip);
  byteio::wr_be16(frame, 0x0800);

  const std::size_t ip_off = frame.size();
  frame.push_back(0x45);  // version 4, ihl 5
  frame.push_back(0x00);  // dscp/ecn
  byteio::wr_be16(frame, static_cast<std::uint16_t>(20 + tcp_len));
  byteio::wr_be16(frame, ip_id);
  byteio::wr_be16(frame, 0x0000);  // flags + fragment offset
  frame.push_back(64);             // ttl
  frame.push_back(6);              // protocol TCP
  byteio::wr_be16(frame, 0);       // checksum placeholder
  byteio::wr_be32(frame, p.src_ip);
  byteio::wr_be32(frame, p.dst_ip);
  const std::uint16_t ip_sum =
      internet_checksum(std::span<const std::uint8_t>(frame).subspan(ip_off, 20));
  frame[ip_off + 10] = static_cast<std::uint8_t>(ip_sum >> 8);
  frame[ip_off + 11] = static_cast<std::uint8_t>(ip_sum & 0xff);

  const std::size_t tcp_off = frame.size();
  byteio::wr_be16(frame, p.src_port);
  byteio::wr_be16(frame, p.dst_port);
  byteio::wr_be32(frame, p.seq);
  byteio::wr_be32(frame, p.ack);
  frame.push_back(static_cast<std::uint8_t>((tcp_len / 4) << 4));
  frame.push_back(p.flags);
  byteio::wr_be16(frame, p.window);
  byteio::wr_be16(frame, 0);  // checksum placeholder
  byteio::wr_be16(frame, 0);  // urgent pointer
  if (p.mss) {
    frame.push_back(2);  // kind MSS
    frame.push_back(4);  // length
    byteio::wr_be16(frame, *p.mss);
  }
  const std::uint16_t tcp_sum = tcp_checksum_ipv4(
      p.src_ip, p.dst_ip, std::span<const std::uint8_t>(frame).subspan(tcp_off, tcp_len));
  frame[tcp_off + 16] = static_cast<std::uint8_t>(tcp_sum >> 8);
  frame[tcp_off + 17] = static_cast<std::uint8_t>(tcp_sum & 0xff);

  return frame;
}

}  // namespace detail

// One probe frame per port (per catalog sequence entry), port order and
// header randomness derived from the seed, timestamps spaced by timing_us
// with a 1 us floor. Timestamps start at 0; callers add their own base.
inline std::vector<Frame> generate_scan(const ScanTechnique& technique, std::uint32_t src_ip,
                                        std::uint32_t dst_ip, std::vector<std::uint16_t> ports,
                                        std::uint64_t timing_us, std::uint64_t seed) {
  if (ports.empty()) throw ConfigError("scan needs at least one port");
  std::mt19937_64 rng(seed);
  seeded_shuffle(ports, rng);
  const std::uint64_t step = std::max<std::uint64_t>(timing_us, 1);

  std::vector<Frame> out;
  out.reserve(ports.size() * technique.probe_flags.size());
  std::uint64_t ts = 0;
  for (std::uint16_t port : ports) {
    // One connection's worth of state per port.
    const auto src_port = static_cast<std::uint16_t>(32768 + uniform_below(rng, 28232));
    const auto isn = static_cast<std::uint32_t>(rng());
    const auto peer_ack = static_cast<std::uint32_t>(rng());
    const auto ip_id = static_cast<std::uint16_t>(rng());
    for (std::size_t i = 0; i < technique.probe_flags.size(); ++i) {
      detail::ProbeParams p;
      p.src_ip = src_ip;
      p.dst_ip = dst_ip;
      p.src_port = src_port;
      p.dst_port = port;
      p.flags = technique.probe_flags[i];
      p.seq = i == 0 ? isn : isn + 1;
      p.ack = (p.flags & kTcpAck) ? peer_ack : 0;
      if (technique.with_mss && (p.flags & kTcpSyn)) p.mss = 1460;
      Frame f;
      f.ts_epoch_us = ts;
      f.bytes = detail::build_probe_frame(p, static_cast<std::uint16_t>(ip_id + i));
      f.orig_len = static_cast<std::uint32_t>(f.bytes.size());
      out.push_back(std::move(f));
      ts += step;
    }
  }
  return out;
}

// Splits "<label>_<unix_seconds>.pcap" on the last underscore; the label may
// itself contain underscores.
inline std::pair<std::string, std::uint64_t> label_from_filename(const std::string& name) {
  std::string base = name;
  if (const auto slash = base.find_last_of('/'); slash != std::string::npos)
    base = base.substr(slash + 1);
  const std::string ext = ".pcap";
  if (base.size() <= ext.size() || base.compare(base.size() - ext.size(), ext.size(), ext) != 0)
    throw BadNameError("capture name '" + name + "' does not end in .pcap");
  const std::string stem = base.substr(0, base.size() - ext.size());
  const auto underscore = stem.find_last_of('_');
  if (underscore == std::string::npos)
    throw BadNameError("capture name '" + name + "' has no label_timestamp separator");
  const std::string label = stem.substr(0, underscore);
  const std::string ts_text = stem.substr(underscore + 1);
  if (label.empty()) throw BadNameError("capture name '" + name + "' has an empty label");
  if (ts_text.empty()) throw BadNameError("capture name '" + name + "' has an empty timestamp");
  std::uint64_t ts = 0;
  const auto [end, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
  if (ec != std::errc{} || end != ts_text.data() + ts_text.size())
    throw BadNameError("capture name '" + name + "' has a non-numeric timestamp");
  return {label, ts};
}

// ---------------------------------------------------------------------------
// Campaign configuration.

struct TargetSpec {
  std::string name;
  std::uint32_t ip = 0;
};

struct AttackEntry {
  std::string label;
  std::string technique;
  TargetSpec target;
  std::vector<std::uint16_t> ports;
  std::uint64_t timing_us = 1000;
  std::uint32_t repetitions = 1;
};

struct CampaignConfig {
  std::uint64_t seed = 0;
  std::uint32_t attacker_ip = 0;
  std::vector<TargetSpec> targets;
  std::vector<AttackEntry> attacks;
};

namespace detail {

inline void parse_port_token(const std::string& token, std::vector<std::uint16_t>& out) {
  auto parse_one = [&](std::string_view text) -> std::uint32_t {
    std::uint32_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size() || v == 0 || v > 65535)
      throw ConfigError("invalid port '" + std::string(text) + "'");
    return v;
  };
  const auto dash = token.find('-');
  if (dash == std::string::npos) {
    out.push_back(static_cast<std::uint16_t>(parse_one(token)));
    return;
  }
  const std::uint32_t lo = parse_one(std::string_view(token).substr(0, dash));
  const std::uint32_t hi = parse_one(std::string_view(token).substr(dash + 1));
  if (lo > hi) throw ConfigError("port range '" + token + "' is reversed");
  for (std::uint32_t p = lo; p <= hi; ++p) out.push_back(static_cast<std::uint16_t>(p));
}

inline std::vector<std::uint16_t> parse_ports(const nlohmann::json& j) {
  std::vector<std::uint16_t> out;
  if (j.is_string()) {
    parse_port_token(j.get<std::string>(), out);
  } else if (j.is_number_unsigned()) {
    parse_port_token(std::to_string(j.get<std::uint64_t>()), out);
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (e.is_string())
        parse_port_token(e.get<std::string>(), out);
      else if (e.is_number_unsigned())
        parse_port_token(std::to_string(e.get<std::uint64_t>()), out);
      else
        throw ConfigError("ports entries must be integers or 'a-b' ranges");
    }
  } else {
    throw ConfigError("ports must be an integer, an 'a-b' range, or an array of those");
  }
  if (out.empty()) throw ConfigError("ports must be non-empty");
  return out;
}

inline std::uint32_t require_ip(const nlohmann::json& j, const std::string& what) {
  if (!j.is_string()) throw ConfigError(what + " must be a dotted-quad string");
  const auto ip = parse_ipv4(j.get<std::string>());
  if (!ip) throw ConfigError(what + " '" + j.get<std::string>() + "' is not a valid IPv4 address");
  return *ip;
}

}  // namespace detail

// Parses and validates a campaign document that has already been through a
// JSON parser. Throws ConfigError on any violated invariant.
inline CampaignConfig parse_campaign_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("campaign config must be a JSON object");
  CampaignConfig cfg;
  cfg.seed = doc.value("seed", std::uint64_t{0});
  cfg.attacker_ip =
      doc.contains("attacker_ip") ? detail::require_ip(doc.at("attacker_ip"), "attacker_ip")
                                  : parse_ipv4("10.66.0.1").value();

  std::map<std::string, std::uint32_t> targets_by_name;
  if (doc.contains("targets")) {
    if (!doc.at("targets").is_array()) throw ConfigError("targets must be an array");
    for (const auto& t : doc.at("targets")) {
      TargetSpec spec;
      spec.ip = detail::require_ip(t.at("ip"), "target ip");
      spec.name = t.value("name", format_ipv4(spec.ip));
      if (targets_by_name.count(spec.name)) throw ConfigError("duplicate target name '" + spec.name + "'");
      targets_by_name[spec.name] = spec.ip;
      cfg.targets.push_back(spec);
    }
  }
  auto resolve_target = [&](const nlohmann::json& j) -> TargetSpec {
    if (!j.is_string()) throw ConfigError("attack target must be a target name or IPv4 string");
    const std::string text = j.get<std::string>();
    if (const auto it = targets_by_name.find(text); it != targets_by_name.end())
      return {text, it->second};
    const auto ip = parse_ipv4(text);
    if (!ip) throw ConfigError("attack target '" + text + "' is neither a declared target nor an IPv4 address");
    TargetSpec spec{text, *ip};
    if (!targets_by_name.count(text)) {
      targets_by_name[text] = *ip;
      cfg.targets.push_back(spec);
    }
    return spec;
  };

  if (!doc.contains("attacks") || !doc.at("attacks").is_array() || doc.at("attacks").empty())
    throw ConfigError("campaign config needs a non-empty attacks array");

  std::set<std::tuple<std::string, std::string, std::uint32_t>> seen;
  for (const auto& a : doc.at("attacks")) {
    AttackEntry e;
    e.label = a.value("label", std::string{});
    if (!valid_label(e.label))
      throw ConfigError("attack label '" + e.label + "' is empty, too long, or contains a path separator");
    e.technique = a.value("technique", std::string{});
    if (!find_technique(e.technique))
      throw ConfigError("unknown scan technique '" + e.technique + "'");
    e.target = resolve_target(a.at("target"));
    if (e.target.ip == cfg.attacker_ip)
      throw ConfigError("attack '" + e.label + "' targets the attacker address");
    e.ports = detail::parse_ports(a.at("ports"));
    e.timing_us = a.value("timing_us", std::uint64_t{1000});
    e.repetitions = a.value("repetitions", std::uint32_t{1});
    if (e.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (!seen.insert({e.label, e.technique, e.target.ip}).second)
      throw ConfigError("duplicate attack entry (label '" + e.label + "', technique '" + e.technique +
                        "', target " + format_ipv4(e.target.ip) + "); use repetitions instead");
    cfg.attacks.push_back(std::move(e));
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Campaign execution.

// One instrumented target: a control channel plus, for simulated targets, a
// way to deliver attack frames to its capture source.
class CampaignTarget {
 public:
  virtual ~CampaignTarget() = default;
  virtual const std::string& name() const = 0;
  virtual std::uint32_t ip() const = 0;
  virtual ControlTransport& transport() = 0;
  // Daemon-timebase clock, used for expected capture filenames.
  virtual std::uint32_t clock_now() = 0;
  // Synthetic path: deliver frames to the capture source. Timestamps in the
  // frames are relative; the target offsets them onto its own timebase.
  virtual void inject(const std::vector<Frame>& frames) = 0;
  // Local path of a produced capture, when the target is in-process.
  virtual std::optional<std::filesystem::path> resolve(const std::string& filename) const = 0;
};

struct AttackRun {
  const AttackEntry* entry = nullptr;
  std::uint32_t attacker_ip = 0;
  std::uint32_t repetition = 0;
  std::uint64_t seed = 0;
};

using AttackExecutor = std::function<void(const AttackRun&, CampaignTarget&)>;

// Default executor: replaces the real attack container with the deterministic
// probe generator.
inline AttackExecutor synthetic_executor() {
  return [](const AttackRun& run, CampaignTarget& target) {
    const ScanTechnique* technique = find_technique(run.entry->technique);
    if (!technique) throw ConfigError("unknown scan technique '" + run.entry->technique + "'");
    target.inject(generate_scan(*technique, run.attacker_ip, target.ip(), run.entry->ports,
                                run.entry->timing_us, run.seed));
  };
}

// Operator path: expand a command template and hand it to the shell. Untested
// at desk scale; it exists for deployments with real scanners and daemons.
inline AttackExecutor command_executor(std::string command_template) {
  return [command_template](const AttackRun& run, CampaignTarget& target) {
    std::string cmd = command_template;
    auto replace_all = [&cmd](const std::string& key, const std::string& value) {
      for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos)) {
        cmd.replace(pos, key.size(), value);
        pos += value.size();
      }
    };
    replace_all("{target}", format_ipv4(target.ip()));
    replace_all("{label}", run.entry->label);
    replace_all("{technique}", run.entry->technique);
    std::string ports;
    for (std::uint16_t p : run.entry->ports) {
      if (!ports.empty()) ports += ",";
      ports += std::to_string(p);
    }
    replace_all("{ports}", ports);
    const int rc = std::system(cmd.c_str());
    if (rc != 0) throw DataError("attack command exited with status " + std::to_string(rc));
  };
}

struct RunRecord {
  std::string label;
  std::string technique;
  std::string target_name;
  std::uint32_t repetition = 0;
  std::string filename;  // "<label>_<ts>.pcap"
  std::optional<std::filesystem::path> path;
};

struct RunFailure {
  std::string label;
  std::string target_name;
  std::uint32_t repetition = 0;
  std::string error;
};

struct CampaignResult {
  std::vector<RunRecord> runs;
  std::vector<RunFailure> failures;

  bool complete() const { return failures.empty(); }
};

// Runs every attack entry x repetition sequentially: START, execute, STOP.
// Failures are collected per run; completed runs are still returned.
inline CampaignResult run_campaign(const CampaignConfig& config,
                                   std::span<CampaignTarget* const> targets,
                                   const AttackExecutor& executor, const RetryPolicy& policy = {}) {
  auto find_target = [&](std::uint32_t ip) -> CampaignTarget* {
    for (CampaignTarget* t : targets) {
      if (t->ip() == ip) return t;
    }
    return nullptr;
  };

  CampaignResult result;
  for (std::size_t entry_index = 0; entry_index < config.attacks.size(); ++entry_index) {
    const AttackEntry& entry = config.attacks[entry_index];
    CampaignTarget* target = find_target(entry.target.ip);
    if (!target) {
      result.failures.push_back({entry.label, entry.target.name, 0,
                                 "no campaign target bound to " + format_ipv4(entry.target.ip)});
      continue;
    }
    for (std::uint32_t rep = 0; rep < entry.repetitions; ++rep) {
      AttackRun run;
      run.entry = &entry;
      run.attacker_ip = config.attacker_ip;
      run.repetition = rep;
      run.seed = derive_seed(config.seed, entry_index, rep);
      try {
        const std::string filename = controller_run(
            target->transport(), entry.label, [&] { executor(run, *target); },
            [&] { return target->clock_now(); }, policy);
        result.runs.push_back({entry.label, entry.technique, target->name(), rep, filename,
                               target->resolve(filename)});
      } catch (const Error& e) {
        result.failures.push_back({entry.label, target->name(), rep, e.what()});
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// In-process target: a daemon state machine, a virtual clock, and a directory
// to drop captures in. Doubles as the control transport. This is the desk-
// scale stand-in for a cloud instance running the UDP daemon.
class InProcessTarget : public CampaignTarget, public ControlTransport {
 public:
  InProcessTarget(std::string name, std::uint32_t self_ip, std::uint32_t attacker_ip,
                  std::filesystem::path out_dir, std::uint32_t base_ts = 1'700'000'000)
      : name_(std::move(name)),
        attacker_(Endpoint{attacker_ip, 46060}),
        dir_(std::move(out_dir)),
        base_ts_(base_ts) {
    config_.self_ip = self_ip;
    config_.link_type = LinkType::ethernet;
    std::filesystem::create_directories(dir_);
  }

  const std::string& name() const override { return name_; }
  std::uint32_t ip() const override { return config_.self_ip; }
  ControlTransport& transport() override { return *this; }
  std::uint32_t clock_now() override { return base_ts_ + starts_; }

  std::optional<std::vector<std::uint8_t>> roundtrip(std::span<const std::uint8_t> datagram,
                                                     std::chrono::milliseconds) override {
    DatagramEvent ev{attacker_, {datagram.begin(), datagram.end()}};
    return apply(DaemonEvent{std::move(ev)});
  }

  void inject(const std::vector<Frame>& frames) override {
    for (const Frame& f : frames) {
      FrameEvent ev{frame_base_us_ + f.ts_epoch_us, f.bytes};
      apply(DaemonEvent{std::move(ev)});
    }
  }

  std::optional<std::filesystem::path> resolve(const std::string& filename) const override {
    return dir_ / filename;
  }

  void shutdown() { apply(DaemonEvent{ShutdownEvent{}}); }

  const std::vector<std::filesystem::path>& files_written() const { return files_written_; }

 private:
  std::optional<std::vector<std::uint8_t>> apply(const DaemonEvent& event) {
    StepResult step = daemon_step(state_, event, clock_now(), config_);
    state_ = std::move(step.state);
    std::optional<std::vector<std::uint8_t>> reply;
    for (auto& action : step.actions) {
      if (auto* send = std::get_if<SendAction>(&action)) {
        reply = std::move(send->bytes);
      } else if (auto* open = std::get_if<OpenAction>(&action)) {
        current_ = CaptureFile{config_.link_type, {}};
        frame_base_us_ = std::uint64_t{clock_now()} * 1'000'000 + 1000;
        ++starts_;  // next session gets a fresh second
        (void)open;
      } else if (auto* append = std::get_if<AppendAction>(&action)) {
        current_.add_frame(append->ts_epoch_us, std::move(append->frame));
      } else if (auto* close = std::get_if<CloseAction>(&action)) {
        const auto path = dir_ / close->file_name;
        write_pcap_file(path, current_);
        files_written_.push_back(path);
        current_ = CaptureFile{};
      }
    }
    return reply;
  }

  std::string name_;
  Endpoint attacker_;
  std::filesystem::path dir_;
  std::uint32_t base_ts_;
  std::uint32_t starts_ = 0;
  std::uint64_t frame_base_us_ = 0;
  DaemonConfig config_;
  DaemonState state_;
  CaptureFile current_;
  std::vector<std::filesystem::path> files_written_;
};

}  // namespace trapforge
