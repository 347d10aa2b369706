#include "rlab/relay/upstream.hpp"

#include <array>

#include "rlab/common/error.hpp"

namespace rlab::relay {
namespace {

std::atomic<std::size_t> g_instances{0};

}  // namespace

TcpUpstream::TcpUpstream(const std::string& endpoint, std::chrono::milliseconds timeout,
                         FrameHandler on_frame, LostHandler on_lost)
    : on_frame_(std::move(on_frame)), on_lost_(std::move(on_lost)) {
  net::HostPort hp;
  try {
    hp = net::parse_endpoint(endpoint);
  } catch (const Error& e) {
    throw Error(Errc::ConnectFailed, e.what());
  }
  conn_ = net::TcpConnection::connect(hp, timeout);
  ++g_instances;
  reader_ = std::thread([this] { read_loop(); });
}

TcpUpstream::~TcpUpstream() {
  close();
  --g_instances;
}

std::size_t TcpUpstream::instances() { return g_instances; }

bool TcpUpstream::send(const Message& message) {
  if (!live_) return false;
  const auto wire = encode(message);
  std::lock_guard lock(write_mutex_);
  if (!conn_.write_all(wire)) {
    live_ = false;
    return false;
  }
  return true;
}

void TcpUpstream::close() {
  std::lock_guard lock(close_mutex_);
  if (!reader_.joinable()) return;
  closing_ = true;
  if (live_) send(Message{Opcode::Close, {}});
  live_ = false;
  conn_.shutdown();
  reader_.join();
  conn_.close();
}

void TcpUpstream::read_loop() {
  StreamDecoder decoder;
  std::array<std::uint8_t, 64 * 1024> buffer{};
  std::string reason = "upstream disconnected";
  for (;;) {
    const auto n = conn_.read_some(buffer);
    if (n == 0) break;
    try {
      decoder.feed(std::span(buffer.data(), n));
      bool stop = false;
      while (auto message = decoder.next()) {
        if (message->opcode == Opcode::Frame) {
          if (!closing_) on_frame_(decode_frame(message->payload));
        } else if (message->opcode == Opcode::Ping) {
          send(Message{Opcode::Pong, message->payload});
        } else if (message->opcode == Opcode::Close) {
          reason = "upstream closed";
          stop = true;
          break;
        }
      }
      if (stop) break;
    } catch (const Error& e) {
      reason = e.what();
      break;
    }
  }
  live_ = false;
  if (!closing_ && on_lost_) on_lost_(reason);
}

UpstreamConnector tcp_connector(std::chrono::milliseconds timeout) {
  return [timeout](const std::string& endpoint, FrameHandler on_frame, LostHandler on_lost) {
    return std::make_unique<TcpUpstream>(endpoint, timeout, std::move(on_frame), std::move(on_lost));
  };
}

}  // namespace rlab::relay
