#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>

#include "rlab/common/ids.hpp"
#include "rlab/relay/protocol.hpp"

namespace rlab::relay {

struct Outgoing {
  Opcode opcode = Opcode::Ping;
  std::shared_ptr<const Bytes> wire;
};

/// Outbound queue for one dashboard connection. Frames are conflated: when
/// `frame_capacity` frames are queued the oldest queued frame is dropped.
/// Control messages are never dropped. After close() only the Close message
/// remains to be drained.
class ClientChannel {
 public:
  ClientChannel(std::uint64_t id, SessionId session, UserId user, std::size_t frame_capacity);

  [[nodiscard]] std::uint64_t id() const { return id_; }
  [[nodiscard]] SessionId session() const { return session_; }
  [[nodiscard]] UserId user() const { return user_; }

  /// False if the channel is closed.
  bool push_control(Message message);
  /// Rejects frames whose id does not exceed the last one queued.
  bool push_frame(std::uint64_t frame_id, std::shared_ptr<const Bytes> wire);

  std::optional<Outgoing> try_pop();
  /// Blocks until a message is available, the channel is closed and drained,
  /// or the timeout passes.
  std::optional<Outgoing> pop(std::chrono::milliseconds timeout);

  /// Queues a Close message carrying `reason`. Idempotent.
  void close(const std::string& reason = {});
  [[nodiscard]] bool closed() const;
  [[nodiscard]] std::string close_reason() const;

  /// Called after every enqueue, outside the channel lock.
  void set_notify(std::function<void()> notify);

  [[nodiscard]] std::uint64_t frames_dropped() const { return frames_dropped_; }
  [[nodiscard]] std::uint64_t frames_queued() const { return frames_queued_; }

  /// Input sequencing and inbound decoding; owned by the relay's merge point.
  std::uint32_t last_client_seq = 0;
  StreamDecoder decoder;
  std::mutex inbound_mutex;

 private:
  void notify();

  const std::uint64_t id_;
  const SessionId session_;
  const UserId user_;
  const std::size_t frame_capacity_;

  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Outgoing> queue_;
  std::size_t queued_frames_ = 0;
  std::uint64_t last_frame_id_ = 0;
  bool closed_ = false;
  std::string close_reason_;
  std::function<void()> notify_;
  std::atomic<std::uint64_t> frames_dropped_{0};
  std::atomic<std::uint64_t> frames_queued_{0};
};

}  // namespace rlab::relay
