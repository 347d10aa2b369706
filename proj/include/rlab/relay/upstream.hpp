#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "rlab/net/tcp.hpp"
#include "rlab/relay/protocol.hpp"

namespace rlab::relay {

using FrameHandler = std::function<void(const FrameUpdate&)>;
using LostHandler = std::function<void(const std::string& reason)>;

/// Connection from the relay to a session's desktop server.
class Upstream {
 public:
  virtual ~Upstream() = default;
  /// Sends one encoded message; false when the connection is gone.
  virtual bool send(const Message& message) = 0;
  /// Sends Close, disconnects and stops delivering frames. Idempotent. Must
  /// not be called from a frame handler.
  virtual void close() = 0;
  [[nodiscard]] virtual bool live() const = 0;
};

using UpstreamConnector = std::function<std::unique_ptr<Upstream>(
    const std::string& endpoint, FrameHandler on_frame, LostHandler on_lost)>;

/// TCP upstream with a reader thread that decodes frames and answers pings.
class TcpUpstream final : public Upstream {
 public:
  /// Throws ConnectFailed.
  TcpUpstream(const std::string& endpoint, std::chrono::milliseconds timeout, FrameHandler on_frame,
              LostHandler on_lost);
  ~TcpUpstream() override;

  bool send(const Message& message) override;
  void close() override;
  [[nodiscard]] bool live() const override { return live_; }

  /// Number of TcpUpstream objects alive in the process.
  static std::size_t instances();

 private:
  void read_loop();

  net::TcpConnection conn_;
  FrameHandler on_frame_;
  LostHandler on_lost_;
  std::mutex write_mutex_;
  std::mutex close_mutex_;
  std::atomic<bool> live_{true};
  std::atomic<bool> closing_{false};
  std::thread reader_;
};

UpstreamConnector tcp_connector(std::chrono::milliseconds timeout);

}  // namespace rlab::relay
