#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trapforge/control.hpp"
#include "trapforge/errors.hpp"
#include "trapforge/log.hpp"
#include "trapforge/pcap.hpp"

namespace trapforge {

namespace detail {

inline sockaddr_in to_sockaddr(const Endpoint& e) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(e.ip);
  addr.sin_port = htons(e.port);
  return addr;
}

inline Endpoint from_sockaddr(const sockaddr_in& addr) {
  return {ntohl(addr.sin_addr.s_addr), ntohs(addr.sin_port)};
}

}  // namespace detail

class UdpSocket {
 public:
  UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
    if (fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  }
  ~UdpSocket() {
    if (fd_ >= 0) ::close(fd_);
  }
  UdpSocket(UdpSocket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  UdpSocket& operator=(UdpSocket&& other) noexcept {
    if (this != &other) {
      if (fd_ >= 0) ::close(fd_);
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  // ip/port in host order; port 0 asks the kernel for a free port.
  void bind(std::uint32_t ip, std::uint16_t port) {
    const sockaddr_in addr = detail::to_sockaddr({ip, port});
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0) {
      if (errno == EADDRINUSE)
        throw PortInUseError("UDP port " + std::to_string(port) + " is already bound");
      throw IoError(std::string("bind: ") + std::strerror(errno));
    }
  }

  std::uint16_t local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0)
      throw IoError(std::string("getsockname: ") + std::strerror(errno));
    return ntohs(addr.sin_port);
  }

  void send_to(const Endpoint& to, std::span<const std::uint8_t> bytes) {
    const sockaddr_in addr = detail::to_sockaddr(to);
    const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0,
                            reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
    if (n < 0 || static_cast<std::size_t>(n) != bytes.size())
      throw IoError(std::string("sendto: ") + std::strerror(errno));
  }

  // Waits up to `timeout` for one datagram; nullopt on timeout.
  std::optional<std::pair<Endpoint, std::vector<std::uint8_t>>> recv_from(
      std::chrono::milliseconds timeout) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc < 0) {
      if (errno == EINTR) return std::nullopt;
      throw IoError(std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) return std::nullopt;

    std::vector<std::uint8_t> buf(65535);
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    const auto n =
        ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&addr), &len);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) return std::nullopt;
      throw IoError(std::string("recvfrom: ") + std::strerror(errno));
    }
    buf.resize(static_cast<std::size_t>(n));
    return std::make_pair(detail::from_sockaddr(addr), std::move(buf));
  }

  int fd() const { return fd_; }

 private:
  int fd_;
};

// Controller transport over a real UDP socket. Replies from anyone other than
// the daemon endpoint are ignored.
class UdpControlTransport : public ControlTransport {
 public:
  explicit UdpControlTransport(Endpoint daemon) : daemon_(daemon) { socket_.bind(0, 0); }

  std::optional<std::vector<std::uint8_t>> roundtrip(std::span<const std::uint8_t> datagram,
                                                     std::chrono::milliseconds timeout) override {
    socket_.send_to(daemon_, datagram);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining <= std::chrono::milliseconds::zero()) return std::nullopt;
      auto got = socket_.recv_from(remaining);
      if (!got) return std::nullopt;
      if (got->first == daemon_) return std::move(got->second);
    }
  }

 private:
  UdpSocket socket_;
  Endpoint daemon_;
};

// ---------------------------------------------------------------------------
// Daemon runtime: drives the pure state machine from a real UDP socket and
// executes its actions. The frame source is a pcap replayed once per session;
// live interface capture is an operator concern and stays out of this tool.

struct DaemonOptions {
  std::uint16_t port = 6060;
  std::uint32_t self_ip = 0;  // the target address frames must be sent to
  std::filesystem::path output_dir = ".";
  std::optional<std::filesystem::path> inject;  // frames replayed on each START
  std::size_t max_sessions = 0;                 // stop after N closed sessions; 0 = run until stopped
};

class DaemonRuntime {
 public:
  explicit DaemonRuntime(DaemonOptions opts) : opts_(std::move(opts)) {
    socket_.bind(0, opts_.port);
    if (opts_.inject) replay_ = read_pcap_file(*opts_.inject);
    config_.self_ip = opts_.self_ip;
    config_.link_type = replay_ ? replay_->link_type : LinkType::ethernet;
  }

  std::uint16_t port() const { return socket_.local_port(); }
  std::size_t sessions_closed() const { return sessions_closed_; }
  const std::vector<std::filesystem::path>& files_written() const { return files_written_; }

  void run(const std::atomic<bool>* stop = nullptr) {
    while (!stop || !stop->load()) {
      if (opts_.max_sessions && sessions_closed_ >= opts_.max_sessions) break;
      auto got = socket_.recv_from(std::chrono::milliseconds(100));
      if (!got) continue;
      handle(DatagramEvent{got->first, std::move(got->second)});
    }
    handle(ShutdownEvent{});
  }

 private:
  void handle(const DaemonEvent& event) {
    const auto now = static_cast<std::uint32_t>(std::time(nullptr));
    const bool was_recording = state_.recording();
    StepResult res = daemon_step(state_, event, now, config_);
    state_ = std::move(res.state);
    for (const DaemonAction& action : res.actions) execute(action);
    if (!was_recording && state_.recording() && replay_) {
      for (const Frame& f : replay_->frames) handle(FrameEvent{f.ts_epoch_us, f.bytes});
    }
  }

  void execute(const DaemonAction& action) {
    if (const auto* send = std::get_if<SendAction>(&action)) {
      socket_.send_to(send->to, send->bytes);
    } else if (const auto* open = std::get_if<OpenAction>(&action)) {
      current_ = CaptureFile{config_.link_type, {}};
      log::info("session opened: " + open->file_name);
    } else if (const auto* append = std::get_if<AppendAction>(&action)) {
      current_->add_frame(append->ts_epoch_us, append->frame);
    } else if (const auto* close = std::get_if<CloseAction>(&action)) {
      const auto path = opts_.output_dir / close->file_name;
      const std::size_t frames = current_->frames.size();
      write_pcap_file(path, *current_);
      current_.reset();
      files_written_.push_back(path);
      ++sessions_closed_;
      log::info("session closed: " + path.string() + " (" + std::to_string(frames) + " frames)");
    }
  }

  DaemonOptions opts_;
  UdpSocket socket_;
  DaemonConfig config_;
  DaemonState state_;
  std::optional<CaptureFile> replay_;
  std::optional<CaptureFile> current_;
  std::vector<std::filesystem::path> files_written_;
  std::size_t sessions_closed_ = 0;
};

}  // namespace trapforge
