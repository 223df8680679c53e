#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "trapforge/byteio.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/ipv4.hpp"
#include "trapforge/packet.hpp"

namespace trapforge {

// Wire layout (big-endian where multi-byte):
//   magic   4 bytes  "ABTP"
//   version 1 byte   0x01
//   kind    1 byte   0x01 START / 0x02 STOP / 0x81 ACK_START / 0x82 ACK_STOP
//   label_len 2 bytes
//   label   label_len bytes, START only
//   status  1 byte, ACKs only (0 ok, 1 refused)
inline constexpr std::uint8_t kControlVersion = 0x01;
inline constexpr std::size_t kControlHeaderLen = 8;
inline constexpr std::size_t kMaxLabelLen = 255;
inline constexpr const char kControlMagic[4] = {'A', 'B', 'T', 'P'};

enum class MessageKind : std::uint8_t {
  start = 0x01,
  stop = 0x02,
  ack_start = 0x81,
  ack_stop = 0x82,
};

inline bool is_ack(MessageKind k) { return k == MessageKind::ack_start || k == MessageKind::ack_stop; }

struct ControlMessage {
  MessageKind kind = MessageKind::start;
  std::string label;        // START only
  std::uint8_t status = 0;  // ACKs only: 0 ok, 1 refused

  bool operator==(const ControlMessage&) const = default;

  static ControlMessage start(std::string label) { return {MessageKind::start, std::move(label), 0}; }
  static ControlMessage stop() { return {MessageKind::stop, {}, 0}; }
  static ControlMessage ack(MessageKind of, bool refused) {
    ControlMessage m;
    m.kind = of == MessageKind::start ? MessageKind::ack_start : MessageKind::ack_stop;
    m.status = refused ? 1 : 0;
    return m;
  }
};

// Labels end up in filenames, so path separators and NULs are rejected.
inline bool valid_label(std::string_view label) {
  if (label.empty() || label.size() > kMaxLabelLen) return false;
  for (char c : label) {
    if (c == '/' || c == '\\' || c == '\0') return false;
  }
  return true;
}

inline std::vector<std::uint8_t> encode_message(const ControlMessage& m) {
  if (m.kind == MessageKind::start) {
    if (m.label.size() > kMaxLabelLen)
      throw LabelTooLongError("label of " + std::to_string(m.label.size()) + " bytes exceeds " +
                              std::to_string(kMaxLabelLen));
    if (!valid_label(m.label)) throw std::invalid_argument("START label empty or contains '/', '\\', or NUL");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kControlHeaderLen + m.label.size() + 1);
  out.insert(out.end(), std::begin(kControlMagic), std::end(kControlMagic));
  out.push_back(kControlVersion);
  out.push_back(static_cast<std::uint8_t>(m.kind));
  const std::uint16_t label_len =
      m.kind == MessageKind::start ? static_cast<std::uint16_t>(m.label.size()) : 0;
  byteio::wr_be16(out, label_len);
  if (m.kind == MessageKind::start) out.insert(out.end(), m.label.begin(), m.label.end());
  if (is_ack(m.kind)) out.push_back(m.status);
  return out;
}

enum class DecodeError {
  bad_magic,
  bad_version,
  bad_kind,
  short_datagram,
  label_length_mismatch,
};

inline const char* decode_error_name(DecodeError e) {
  switch (e) {
    case DecodeError::bad_magic: return "bad_magic";
    case DecodeError::bad_version: return "bad_version";
    case DecodeError::bad_kind: return "bad_kind";
    case DecodeError::short_datagram: return "short_datagram";
    case DecodeError::label_length_mismatch: return "label_length_mismatch";
  }
  return "?";
}

using DecodeResult = std::variant<ControlMessage, DecodeError>;

inline DecodeResult decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kControlHeaderLen) return DecodeError::short_datagram;
  for (std::size_t i = 0; i < 4; ++i) {
    if (bytes[i] != static_cast<std::uint8_t>(kControlMagic[i])) return DecodeError::bad_magic;
  }
  if (bytes[4] != kControlVersion) return DecodeError::bad_version;
  const std::uint8_t kind_byte = bytes[5];
  if (kind_byte != 0x01 && kind_byte != 0x02 && kind_byte != 0x81 && kind_byte != 0x82)
    return DecodeError::bad_kind;
  const auto kind = static_cast<MessageKind>(kind_byte);
  const std::uint16_t label_len = byteio::rd_be16(bytes, 6);

  ControlMessage m;
  m.kind = kind;
  if (kind == MessageKind::start) {
    if (bytes.size() != kControlHeaderLen + label_len) return DecodeError::label_length_mismatch;
    m.label.assign(bytes.begin() + kControlHeaderLen, bytes.end());
  } else if (kind == MessageKind::stop) {
    if (label_len != 0 || bytes.size() != kControlHeaderLen) return DecodeError::label_length_mismatch;
  } else {
    if (label_len != 0) return DecodeError::label_length_mismatch;
    if (bytes.size() < kControlHeaderLen + 1) return DecodeError::short_datagram;
    if (bytes.size() != kControlHeaderLen + 1) return DecodeError::label_length_mismatch;
    m.status = bytes[kControlHeaderLen];
  }
  return m;
}

// True iff the frame is TCP from the attacker to the target, one direction
// only. Frames that fail to parse never match.
class PacketPredicate {
 public:
  PacketPredicate(std::uint32_t attacker_ip, std::uint32_t target_ip)
      : attacker_ip_(attacker_ip), target_ip_(target_ip) {}

  bool matches(const PacketRecord& r) const {
    return r.ip_proto == 6 && r.src_ip == attacker_ip_ && r.dst_ip == target_ip_;
  }

  bool matches(std::span<const std::uint8_t> frame, LinkType link) const {
    const auto res = extract_features(frame, link, 0);
    return extract_ok(res) && matches(std::get<PacketRecord>(res));
  }

  std::uint32_t attacker_ip() const { return attacker_ip_; }
  std::uint32_t target_ip() const { return target_ip_; }

 private:
  std::uint32_t attacker_ip_;
  std::uint32_t target_ip_;
};

inline PacketPredicate build_capture_filter(std::uint32_t attacker_ip, std::uint32_t target_ip) {
  if (attacker_ip == target_ip)
    throw SameAddressError("attacker and target address are both " + format_ipv4(attacker_ip));
  return PacketPredicate(attacker_ip, target_ip);
}

inline std::string make_capture_filename(const std::string& label, std::uint32_t start_ts) {
  return label + "_" + std::to_string(start_ts) + ".pcap";
}

// ---------------------------------------------------------------------------
// Daemon state machine. Pure: daemon_step maps (state, event) to (state,
// actions); executing the actions (sockets, files) is the runtime's job.

struct Endpoint {
  std::uint32_t ip = 0;
  std::uint16_t port = 0;

  bool operator==(const Endpoint&) const = default;
};

struct DatagramEvent {
  Endpoint from;
  std::vector<std::uint8_t> bytes;
};

struct FrameEvent {
  std::uint64_t ts_epoch_us = 0;
  std::vector<std::uint8_t> frame;
};

struct ShutdownEvent {};

using DaemonEvent = std::variant<DatagramEvent, FrameEvent, ShutdownEvent>;

struct SendAction {
  Endpoint to;
  std::vector<std::uint8_t> bytes;
};

struct OpenAction {
  std::string file_name;
};

struct AppendAction {
  std::uint64_t ts_epoch_us = 0;
  std::vector<std::uint8_t> frame;
};

struct CloseAction {
  std::string file_name;
};

using DaemonAction = std::variant<SendAction, OpenAction, AppendAction, CloseAction>;

struct CaptureSession {
  std::string label;
  std::uint32_t attacker_ip = 0;
  std::uint32_t start_ts = 0;  // unix seconds at START receipt
  std::string output_name;

  bool operator==(const CaptureSession&) const = default;
};

struct DaemonState {
  std::optional<CaptureSession> session;  // at most one recording

  bool recording() const { return session.has_value(); }
};

struct DaemonConfig {
  std::uint32_t self_ip = 0;  // target address, second half of the filter tuple
  LinkType link_type = LinkType::ethernet;
};

struct StepResult {
  DaemonState state;
  std::vector<DaemonAction> actions;
};

namespace detail {

// Refusal for datagrams that never decoded into a command: mirror the kind
// byte when it is readable, otherwise answer ACK_STOP so every datagram still
// gets a reply.
inline MessageKind refusal_kind(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > 5 && bytes[5] == static_cast<std::uint8_t>(MessageKind::start))
    return MessageKind::start;
  return MessageKind::stop;
}

}  // namespace detail

inline StepResult daemon_step(const DaemonState& state, const DaemonEvent& event,
                              std::uint32_t now_unix, const DaemonConfig& config) {
  StepResult out{state, {}};

  if (std::holds_alternative<ShutdownEvent>(event)) {
    if (state.session) {
      out.actions.push_back(CloseAction{state.session->output_name});
      out.state.session.reset();
    }
    return out;
  }

  if (const auto* frame = std::get_if<FrameEvent>(&event)) {
    if (state.session) {
      const PacketPredicate filter(state.session->attacker_ip, config.self_ip);
      if (filter.matches(frame->frame, config.link_type))
        out.actions.push_back(AppendAction{frame->ts_epoch_us, frame->frame});
    }
    return out;
  }

  const auto& datagram = std::get<DatagramEvent>(event);
  auto reply = [&](const ControlMessage& m) {
    out.actions.push_back(SendAction{datagram.from, encode_message(m)});
  };

  const DecodeResult decoded = decode_message(datagram.bytes);
  if (std::holds_alternative<DecodeError>(decoded)) {
    reply(ControlMessage::ack(detail::refusal_kind(datagram.bytes), /*refused=*/true));
    return out;
  }
  const ControlMessage& msg = std::get<ControlMessage>(decoded);

  switch (msg.kind) {
    case MessageKind::start: {
      // Refused when already recording, when the label is unusable, or when
      // the sender address equals our own (no valid filter tuple).
      if (state.session || !valid_label(msg.label) || datagram.from.ip == config.self_ip) {
        reply(ControlMessage::ack(MessageKind::start, /*refused=*/true));
        return out;
      }
      CaptureSession session;
      session.label = msg.label;
      session.attacker_ip = datagram.from.ip;
      session.start_ts = now_unix;
      session.output_name = make_capture_filename(msg.label, now_unix);
      out.actions.push_back(OpenAction{session.output_name});
      out.state.session = std::move(session);
      reply(ControlMessage::ack(MessageKind::start, /*refused=*/false));
      return out;
    }
    case MessageKind::stop: {
      if (!state.session) {
        reply(ControlMessage::ack(MessageKind::stop, /*refused=*/true));
        return out;
      }
      out.actions.push_back(CloseAction{state.session->output_name});
      out.state.session.reset();
      reply(ControlMessage::ack(MessageKind::stop, /*refused=*/false));
      return out;
    }
    default:
      // ACKs are controller-bound; a daemon receiving one refuses it.
      reply(ControlMessage::ack(
          msg.kind == MessageKind::ack_start ? MessageKind::start : MessageKind::stop,
          /*refused=*/true));
      return out;
  }
}

// ---------------------------------------------------------------------------
// Controller side.

// One control round-trip: deliver a datagram, wait up to `timeout` for a
// reply. Implementations exist over real UDP sockets and over an in-process
// daemon for tests and simulated campaigns.
class ControlTransport {
 public:
  virtual ~ControlTransport() = default;
  virtual std::optional<std::vector<std::uint8_t>> roundtrip(std::span<const std::uint8_t> datagram,
                                                             std::chrono::milliseconds timeout) = 0;
};

struct RetryPolicy {
  int attempts = 5;
  std::chrono::milliseconds timeout{250};
  std::chrono::milliseconds backoff{100};  // doubles after each silent attempt
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds) {};
};

namespace detail {

struct AckOutcome {
  ControlMessage ack;
  std::uint32_t sent_ts = 0;  // clock sample at the send of the acked attempt
};

inline AckOutcome await_ack(ControlTransport& transport, const std::vector<std::uint8_t>& datagram,
                            MessageKind expected, const RetryPolicy& policy,
                            const std::function<std::uint32_t()>& clock) {
  auto backoff = policy.backoff;
  for (int attempt = 0; attempt < policy.attempts; ++attempt) {
    if (attempt > 0) {
      policy.sleep(backoff);
      backoff *= 2;
    }
    const std::uint32_t sent_ts = clock();
    auto reply = transport.roundtrip(datagram, policy.timeout);
    if (!reply) continue;
    const DecodeResult decoded = decode_message(*reply);
    if (!std::holds_alternative<ControlMessage>(decoded)) continue;
    const ControlMessage& ack = std::get<ControlMessage>(decoded);
    if (ack.kind != expected) continue;
    if (ack.status != 0)
      throw RefusedError("daemon refused " +
                         std::string(expected == MessageKind::ack_start ? "START" : "STOP"));
    return {ack, sent_ts};
  }
  throw NoAckError("no acknowledgement after " + std::to_string(policy.attempts) + " attempts");
}

}  // namespace detail

// Wraps an attack body in START/STOP against one daemon and returns the
// capture filename the daemon is expected to have produced. The clock must
// run on the same timebase as the daemon's for the name to be exact; the
// in-process harness shares one clock, real deployments tolerate skew.
inline std::string controller_run(ControlTransport& transport, const std::string& label,
                                  const std::function<void()>& body,
                                  const std::function<std::uint32_t()>& clock,
                                  const RetryPolicy& policy = {}) {
  const auto start_bytes = encode_message(ControlMessage::start(label));
  const std::uint32_t start_ts =
      detail::await_ack(transport, start_bytes, MessageKind::ack_start, policy, clock).sent_ts;

  try {
    body();
  } catch (...) {
    // Attack failed: still try to stop the recording, then rethrow.
    try {
      detail::await_ack(transport, encode_message(ControlMessage::stop()), MessageKind::ack_stop,
                        policy, clock);
    } catch (...) {
    }
    throw;
  }

  detail::await_ack(transport, encode_message(ControlMessage::stop()), MessageKind::ack_stop, policy,
                    clock);
  return make_capture_filename(label, start_ts);
}

}  // namespace trapforge
