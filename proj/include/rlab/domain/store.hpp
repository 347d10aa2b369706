#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>

#include "rlab/domain/state.hpp"
#include "rlab/persistence/event_log.hpp"

namespace rlab {

/// The single-writer commit point. A write() runs its check-and-commit under
/// one mutex, so validation against state and the resulting commit are
/// atomic with respect to every other write. Reads take a shared lock and
/// see some committed prefix.
class Store {
 public:
  class Transaction {
   public:
    [[nodiscard]] const LabState& state() const { return store_.state_; }
    [[nodiscard]] TimePoint now() const { return store_.clock_.now(); }
    /// Appends to the log, then applies to state. On StorageFailure the
    /// state is left untouched.
    persistence::DomainEvent commit(const std::string& kind, Json payload);

   private:
    friend class Store;
    explicit Transaction(Store& store) : store_(store) {}
    Store& store_;
  };

  Store(std::unique_ptr<persistence::LogStorage> log_storage,
        std::unique_ptr<persistence::SnapshotStore> snapshots, const Clock& clock);

  static std::unique_ptr<Store> in_memory(const Clock& clock);
  /// events.log and snapshot.json under `dir` (created if missing).
  static std::unique_ptr<Store> open_directory(const std::filesystem::path& dir, bool fsync,
                                               const Clock& clock);

  template <class F>
  auto read(F&& f) const {
    std::shared_lock lock(state_mutex_);
    return f(static_cast<const LabState&>(state_));
  }

  template <class F>
  auto write(F&& f) {
    std::lock_guard lock(writer_mutex_);
    Transaction tx(*this);
    return f(tx);
  }

  [[nodiscard]] LabState copy_state() const;
  persistence::Snapshot take_snapshot();

  [[nodiscard]] const persistence::EventLog& log() const { return log_; }
  [[nodiscard]] const persistence::LoadReport& recovery() const { return log_.recovery(); }
  [[nodiscard]] const Clock& clock() const { return clock_; }

  /// Session ids are needed before the session_started commit (the VM lease
  /// names the session), so they are handed out ahead of time.
  SessionId reserve_session_id();

 private:
  persistence::EventLog log_;
  std::unique_ptr<persistence::SnapshotStore> snapshots_;
  const Clock& clock_;
  std::mutex writer_mutex_;
  mutable std::shared_mutex state_mutex_;
  LabState state_;
  std::atomic<std::uint64_t> next_session_id_{1};
};

}  // namespace rlab
