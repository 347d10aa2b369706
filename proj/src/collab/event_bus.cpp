#include "rlab/collab/event_bus.hpp"

#include <algorithm>

namespace rlab::collab {

std::optional<Json> Subscription::try_pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  auto e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

std::optional<Json> Subscription::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

void Subscription::close() {
  std::function<void()> fn;
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
    fn = notify_;
  }
  ready_.notify_all();
  if (fn) fn();
}

bool Subscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

bool Subscription::overflowed() const {
  std::lock_guard lock(mutex_);
  return overflowed_;
}

void Subscription::set_notify(std::function<void()> notify) {
  std::lock_guard lock(mutex_);
  notify_ = std::move(notify);
}

void Subscription::offer(const Json& event) {
  if (filter_ && !filter_(event)) return;
  std::function<void()> fn;
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (queue_.size() >= capacity_) {
      overflowed_ = true;
      closed_ = true;
    } else {
      queue_.push_back(event);
    }
    fn = notify_;
  }
  ready_.notify_all();
  if (fn) fn();
}

std::shared_ptr<Subscription> EventBus::subscribe(Subscription::Filter filter, std::size_t capacity) {
  auto sub = std::make_shared<Subscription>(std::move(filter), capacity == 0 ? 1 : capacity);
  std::lock_guard lock(mutex_);
  subs_.push_back(sub);
  return sub;
}

void EventBus::unsubscribe(const std::shared_ptr<Subscription>& sub) {
  {
    std::lock_guard lock(mutex_);
    std::erase(subs_, sub);
  }
  sub->close();
}

void EventBus::publish(const Json& event) {
  // Holding the bus lock across offers keeps one global delivery order.
  std::lock_guard lock(mutex_);
  std::erase_if(subs_, [](const auto& s) { return s->closed(); });
  for (const auto& s : subs_) s->offer(event);
}

std::size_t EventBus::subscribers() const {
  std::lock_guard lock(mutex_);
  return subs_.size();
}

}  // namespace rlab::collab
