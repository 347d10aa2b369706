#include "rlab/domain/store.hpp"

#include "rlab/common/error.hpp"

namespace rlab {

persistence::DomainEvent Store::Transaction::commit(const std::string& kind, Json payload) {
  validate_event_payload(kind, payload);
  auto event = store_.log_.commit(kind, std::move(payload), store_.clock_.now());
  std::unique_lock lock(store_.state_mutex_);
  store_.state_.apply(event);
  return event;
}

Store::Store(std::unique_ptr<persistence::LogStorage> log_storage,
             std::unique_ptr<persistence::SnapshotStore> snapshots, const Clock& clock)
    : log_(std::move(log_storage)), snapshots_(std::move(snapshots)), clock_(clock) {
  auto snapshot = snapshots_->load();
  if (snapshot && snapshot->as_of_seq > log_.last_seq()) {
    throw Error(Errc::CorruptLog, "snapshot at seq " + std::to_string(snapshot->as_of_seq) +
                                      " is ahead of the log (last seq " +
                                      std::to_string(log_.last_seq()) + ")");
  }
  state_ = persistence::replay<LabState>(snapshot, log_.events());
  next_session_id_ = state_.next_session_id().value;
}

std::unique_ptr<Store> Store::in_memory(const Clock& clock) {
  return std::make_unique<Store>(std::make_unique<persistence::MemoryLogStorage>(),
                                 std::make_unique<persistence::MemorySnapshotStore>(), clock);
}

std::unique_ptr<Store> Store::open_directory(const std::filesystem::path& dir, bool fsync,
                                             const Clock& clock) {
  std::filesystem::create_directories(dir);
  return std::make_unique<Store>(
      std::make_unique<persistence::FileLogStorage>(dir / "events.log", fsync),
      std::make_unique<persistence::FileSnapshotStore>(dir / "snapshot.json"), clock);
}

LabState Store::copy_state() const {
  std::shared_lock lock(state_mutex_);
  return state_;
}

persistence::Snapshot Store::take_snapshot() {
  persistence::Snapshot snapshot;
  {
    // Holding the writer mutex pins a committed seq for the copy.
    std::lock_guard lock(writer_mutex_);
    snapshot.as_of_seq = log_.last_seq();
    std::shared_lock state_lock(state_mutex_);
    snapshot.state = state_.to_json();
  }
  snapshots_->save(snapshot);
  return snapshot;
}

SessionId Store::reserve_session_id() { return SessionId{next_session_id_.fetch_add(1)}; }

}  // namespace rlab
