#include "rlab/sim/sim_desktop.hpp"

#include <array>

#include "rlab/common/error.hpp"

namespace rlab::sim {

using relay::Bytes;
using relay::FrameEncoding;
using relay::Message;
using relay::Opcode;

SimDesktopServer::SimDesktopServer(SimDesktopConfig config, CallLog* calls)
    : config_(std::move(config)), calls_(calls), listener_(config_.host, 0) {
  if (config_.width < 8 || config_.height < 1) {
    throw Error(Errc::InvalidArgument, "desktop must be at least 8x1 pixels");
  }
  acceptor_ = std::thread([this] { accept_loop(); });
  if (config_.fps > 0) pump_ = std::thread([this] { pump_loop(); });
}

SimDesktopServer::~SimDesktopServer() { stop(); }

std::string SimDesktopServer::endpoint() const {
  return net::format_endpoint({listener_.host(), listener_.port()});
}

void SimDesktopServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  pump_cv_.notify_all();
  if (acceptor_.joinable()) acceptor_.join();
  if (pump_.joinable()) pump_.join();
  std::list<std::unique_ptr<Connection>> conns;
  {
    std::lock_guard lock(conn_mutex_);
    conns.swap(conns_);
  }
  for (auto& c : conns) {
    c->conn.shutdown();
    if (c->reader.joinable()) c->reader.join();
  }
}

relay::FrameUpdate SimDesktopServer::render(std::uint64_t frame_id, std::uint16_t width,
                                            std::uint16_t height, FrameEncoding encoding) {
  Bytes pixels(std::size_t{width} * height * 3);
  const std::uint64_t shift = frame_id % 16;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const bool dark = (((x + shift) / 8) + (y / 8)) % 2 == 0;
      const std::size_t i = (y * width + x) * 3;
      pixels[i] = dark ? 0x20 : 0xE0;
      pixels[i + 1] = dark ? 0x30 : 0xE0;
      pixels[i + 2] = dark ? 0x60 : 0xE0;
    }
  }
  for (std::size_t b = 0; b < 8; ++b) {
    const auto grey = static_cast<std::uint8_t>(frame_id >> (56 - 8 * b));
    pixels[b * 3] = pixels[b * 3 + 1] = pixels[b * 3 + 2] = grey;
  }
  relay::FrameUpdate frame;
  frame.frame_id = frame_id;
  frame.width = width;
  frame.height = height;
  frame.encoding = encoding;
  frame.data = encoding == FrameEncoding::Rle ? relay::rle_encode(pixels) : std::move(pixels);
  return frame;
}

std::optional<std::uint64_t> SimDesktopServer::read_counter(const Bytes& pixels, std::uint16_t width) {
  if (width < 8 || pixels.size() < 24) return std::nullopt;
  std::uint64_t id = 0;
  for (std::size_t b = 0; b < 8; ++b) {
    const auto v = pixels[b * 3];
    if (pixels[b * 3 + 1] != v || pixels[b * 3 + 2] != v) return std::nullopt;
    id = (id << 8) | v;
  }
  return id;
}

std::uint64_t SimDesktopServer::emit_frame() {
  std::lock_guard emit(emit_mutex_);
  const auto id = ++frame_counter_;
  const auto wire =
      relay::encode(relay::frame_message(render(id, config_.width, config_.height, config_.encoding)));
  std::lock_guard lock(conn_mutex_);
  for (auto& c : conns_) send_to(*c, wire);
  return id;
}

std::uint64_t SimDesktopServer::last_frame_id() const {
  std::lock_guard emit(emit_mutex_);
  return frame_counter_;
}

void SimDesktopServer::send_to(Connection& c, const Bytes& wire) {
  if (!c.open) return;
  std::lock_guard lock(c.write_mutex);
  if (!c.conn.write_all(wire)) c.open = false;
}

void SimDesktopServer::accept_loop() {
  while (!stopping_) {
    auto conn = listener_.accept();
    if (!conn) break;
    if (calls_) calls_->record("desktop", "connect", endpoint());
    ++accepted_;
    auto c = std::make_unique<Connection>();
    c->conn = std::move(*conn);
    auto* raw = c.get();
    reap_closed();
    {
      // emit_mutex_ keeps the greeting frame in order with pumped frames.
      std::lock_guard emit(emit_mutex_);
      const auto id = ++frame_counter_;
      send_to(*raw, relay::encode(relay::frame_message(
                        render(id, config_.width, config_.height, config_.encoding))));
      std::lock_guard lock(conn_mutex_);
      conns_.push_back(std::move(c));
    }
    raw->reader = std::thread([this, raw] { read_loop(*raw); });
  }
}

void SimDesktopServer::reap_closed() {
  std::list<std::unique_ptr<Connection>> dead;
  {
    std::lock_guard lock(conn_mutex_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (!(*it)->open) {
        dead.push_back(std::move(*it));
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : dead) {
    c->conn.shutdown();
    if (c->reader.joinable()) c->reader.join();
  }
}

void SimDesktopServer::pump_loop() {
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / config_.fps));
  auto next = std::chrono::steady_clock::now() + period;
  std::unique_lock lock(pump_mutex_);
  while (!stopping_) {
    if (pump_cv_.wait_until(lock, next, [&] { return stopping_.load(); })) break;
    lock.unlock();
    emit_frame();
    lock.lock();
    next += period;
  }
}

void SimDesktopServer::read_loop(Connection& c) {
  relay::StreamDecoder decoder;
  std::array<std::uint8_t, 16 * 1024> buffer{};
  while (c.open) {
    const auto n = c.conn.read_some(buffer);
    if (n == 0) break;
    try {
      decoder.feed(std::span(buffer.data(), n));
      while (auto message = decoder.next()) {
        if (message->opcode == Opcode::Input) {
          const auto event = relay::decode_input(message->payload);
          if (calls_) calls_->record("desktop", "input", std::to_string(event.client_seq));
          std::lock_guard lock(log_mutex_);
          log_.push_back(event);
          log_cv_.notify_all();
        } else if (message->opcode == Opcode::Ping) {
          send_to(c, relay::encode(Message{Opcode::Pong, message->payload}));
        } else if (message->opcode == Opcode::Close) {
          c.open = false;
        }
      }
    } catch (const Error&) {
      break;
    }
  }
  c.open = false;
  if (calls_) calls_->record("desktop", "disconnect", endpoint());
}

std::vector<relay::InputEvent> SimDesktopServer::input_log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

bool SimDesktopServer::wait_for_inputs(std::size_t count, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(log_mutex_);
  return log_cv_.wait_for(lock, timeout, [&] { return log_.size() >= count; });
}

std::size_t SimDesktopServer::connections() const {
  std::lock_guard lock(conn_mutex_);
  std::size_t n = 0;
  for (const auto& c : conns_) n += c->open ? 1 : 0;
  return n;
}

}  // namespace rlab::sim
