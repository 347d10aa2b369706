#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rlab/net/tcp.hpp"
#include "rlab/relay/protocol.hpp"
#include "rlab/sim/fault_plan.hpp"

namespace rlab::sim {

struct SimDesktopConfig {
  std::uint16_t width = 64;
  std::uint16_t height = 48;
  /// 0 disables the pump; frames are then produced only by emit_frame().
  double fps = 10.0;
  relay::FrameEncoding encoding = relay::FrameEncoding::Raw;
  std::string host = "127.0.0.1";
};

/// Loopback stand-in for a VM's remote desktop server. Sends a frame to each
/// new connection and then at `fps` to all connections; records every input
/// event it receives. Frame ids come from one server-wide counter.
class SimDesktopServer {
 public:
  explicit SimDesktopServer(SimDesktopConfig config = {}, CallLog* calls = nullptr);
  ~SimDesktopServer();
  SimDesktopServer(const SimDesktopServer&) = delete;
  SimDesktopServer& operator=(const SimDesktopServer&) = delete;

  [[nodiscard]] std::string endpoint() const;
  [[nodiscard]] const SimDesktopConfig& config() const { return config_; }

  /// Renders and sends the next frame to every connection; returns its id.
  std::uint64_t emit_frame();
  [[nodiscard]] std::uint64_t last_frame_id() const;

  [[nodiscard]] std::vector<relay::InputEvent> input_log() const;
  bool wait_for_inputs(std::size_t count, std::chrono::milliseconds timeout) const;
  [[nodiscard]] std::size_t connections() const;
  [[nodiscard]] std::size_t accepted_total() const { return accepted_; }

  void stop();

  /// Checkerboard that shifts with the frame id; the first 8 pixels of row 0
  /// carry the id as grey levels, most significant byte first.
  static relay::FrameUpdate render(std::uint64_t frame_id, std::uint16_t width, std::uint16_t height,
                                   relay::FrameEncoding encoding);
  static std::optional<std::uint64_t> read_counter(const relay::Bytes& pixels, std::uint16_t width);

 private:
  struct Connection {
    net::TcpConnection conn;
    std::mutex write_mutex;
    std::atomic<bool> open{true};
    std::thread reader;
  };

  void accept_loop();
  void pump_loop();
  void read_loop(Connection& c);
  void send_to(Connection& c, const relay::Bytes& wire);
  void reap_closed();

  SimDesktopConfig config_;
  CallLog* calls_;
  net::TcpListener listener_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> accepted_{0};

  mutable std::mutex emit_mutex_;
  std::uint64_t frame_counter_ = 0;

  mutable std::mutex conn_mutex_;
  std::list<std::unique_ptr<Connection>> conns_;

  mutable std::mutex log_mutex_;
  mutable std::condition_variable log_cv_;
  std::vector<relay::InputEvent> log_;

  std::mutex pump_mutex_;
  std::condition_variable pump_cv_;
  std::thread acceptor_;
  std::thread pump_;
};

}  // namespace rlab::sim
