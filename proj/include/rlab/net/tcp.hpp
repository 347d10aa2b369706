#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rlab::net {

struct HostPort {
  std::string host;
  std::uint16_t port = 0;
};

/// Accepts "tcp://host:port" or "host:port".
HostPort parse_endpoint(const std::string& endpoint);
std::string format_endpoint(const HostPort& hp);

/// Blocking stream socket. One reader thread and one writer thread may use
/// the same connection concurrently.
class TcpConnection {
 public:
  TcpConnection() = default;
  explicit TcpConnection(int fd) : fd_(fd) {}
  ~TcpConnection();
  TcpConnection(TcpConnection&& other) noexcept;
  TcpConnection& operator=(TcpConnection&& other) noexcept;
  TcpConnection(const TcpConnection&) = delete;
  TcpConnection& operator=(const TcpConnection&) = delete;

  /// Throws ConnectFailed.
  static TcpConnection connect(const HostPort& hp, std::chrono::milliseconds timeout);

  /// Returns false once the peer is gone.
  bool write_all(std::span<const std::uint8_t> bytes);
  /// 0 on orderly shutdown or error.
  std::size_t read_some(std::span<std::uint8_t> buffer);
  /// Wakes a blocked reader; the descriptor stays open until close().
  void shutdown();
  void close();
  [[nodiscard]] bool valid() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  /// Port 0 picks an ephemeral port.
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  /// Empty once the listener is closed.
  std::optional<TcpConnection> accept();
  void close();
  [[nodiscard]] std::uint16_t port() const { return port_; }
  [[nodiscard]] const std::string& host() const { return host_; }

 private:
  std::atomic<int> fd_{-1};
  std::string host_;
  std::uint16_t port_ = 0;
};

}  // namespace rlab::net
