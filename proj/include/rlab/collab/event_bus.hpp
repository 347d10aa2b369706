#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "rlab/domain/entities.hpp"

namespace rlab::collab {

/// One subscriber's queue. A subscriber that falls `capacity` events behind
/// is closed rather than skipped, so every delivered stream is a prefix of
/// the published order.
class Subscription {
 public:
  using Filter = std::function<bool(const Json&)>;
  Subscription(Filter filter, std::size_t capacity) : filter_(std::move(filter)), capacity_(capacity) {}

  std::optional<Json> try_pop();
  /// Empty on timeout or when closed and drained.
  std::optional<Json> pop(std::chrono::milliseconds timeout);
  void close();
  [[nodiscard]] bool closed() const;
  [[nodiscard]] bool overflowed() const;
  void set_notify(std::function<void()> notify);

 private:
  friend class EventBus;
  void offer(const Json& event);

  Filter filter_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<Json> queue_;
  bool closed_ = false;
  bool overflowed_ = false;
  std::function<void()> notify_;
};

/// Fan-out of live notifications (chat, sensor values, session changes).
/// Events are JSON objects with a "type" field.
class EventBus {
 public:
  std::shared_ptr<Subscription> subscribe(Subscription::Filter filter, std::size_t capacity = 1024);
  void unsubscribe(const std::shared_ptr<Subscription>& sub);
  /// Non-blocking; publishing order is delivery order for every subscriber.
  void publish(const Json& event);
  [[nodiscard]] std::size_t subscribers() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::shared_ptr<Subscription>> subs_;
};

}  // namespace rlab::collab
