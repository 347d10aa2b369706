#include "rlab/relay/channel.hpp"

namespace rlab::relay {

ClientChannel::ClientChannel(std::uint64_t id, SessionId session, UserId user, std::size_t frame_capacity)
    : id_(id), session_(session), user_(user), frame_capacity_(frame_capacity == 0 ? 1 : frame_capacity) {}

bool ClientChannel::push_control(Message message) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return false;
    queue_.push_back({message.opcode, std::make_shared<const Bytes>(encode(message))});
  }
  notify();
  return true;
}

bool ClientChannel::push_frame(std::uint64_t frame_id, std::shared_ptr<const Bytes> wire) {
  {
    std::lock_guard lock(mutex_);
    if (closed_ || frame_id <= last_frame_id_) return false;
    if (queued_frames_ >= frame_capacity_) {
      for (auto it = queue_.begin(); it != queue_.end(); ++it) {
        if (it->opcode == Opcode::Frame) {
          queue_.erase(it);
          --queued_frames_;
          ++frames_dropped_;
          break;
        }
      }
    }
    queue_.push_back({Opcode::Frame, std::move(wire)});
    ++queued_frames_;
    ++frames_queued_;
    last_frame_id_ = frame_id;
  }
  notify();
  return true;
}

std::optional<Outgoing> ClientChannel::try_pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  auto out = std::move(queue_.front());
  queue_.pop_front();
  if (out.opcode == Opcode::Frame) --queued_frames_;
  return out;
}

std::optional<Outgoing> ClientChannel::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto out = std::move(queue_.front());
  queue_.pop_front();
  if (out.opcode == Opcode::Frame) --queued_frames_;
  return out;
}

void ClientChannel::close(const std::string& reason) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    closed_ = true;
    close_reason_ = reason;
    // Pending frames are discarded; pending acks still go out before Close.
    std::deque<Outgoing> kept;
    for (auto& m : queue_) {
      if (m.opcode != Opcode::Frame) kept.push_back(std::move(m));
    }
    queue_ = std::move(kept);
    queued_frames_ = 0;
    const Message close_msg{Opcode::Close, Bytes(reason.begin(), reason.end())};
    queue_.push_back({Opcode::Close, std::make_shared<const Bytes>(encode(close_msg))});
  }
  notify();
}

bool ClientChannel::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::string ClientChannel::close_reason() const {
  std::lock_guard lock(mutex_);
  return close_reason_;
}

void ClientChannel::set_notify(std::function<void()> notify) {
  {
    std::lock_guard lock(mutex_);
    notify_ = std::move(notify);
  }
  this->notify();
}

void ClientChannel::notify() {
  std::function<void()> fn;
  {
    std::lock_guard lock(mutex_);
    fn = notify_;
  }
  ready_.notify_all();
  if (fn) fn();
}

}  // namespace rlab::relay
