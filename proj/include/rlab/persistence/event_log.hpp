#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlab/common/time.hpp"

namespace rlab::persistence {

using Json = nlohmann::json;

/// One committed change. `payload` is the canonical JSON of the change;
/// `seq` is gap-free across the whole log, starting at 1.
struct DomainEvent {
  std::uint64_t seq = 0;
  TimePoint at{};
  std::string kind;
  Json payload;

  bool operator==(const DomainEvent&) const = default;
};

/// Single-line canonical form (sorted keys, no whitespace).
std::string encode_event(const DomainEvent& event);
DomainEvent decode_event(std::string_view line);

/// Byte sink behind the log. append() must be durable when it returns and
/// must leave the stored bytes unchanged when it throws.
class LogStorage {
 public:
  virtual ~LogStorage() = default;
  virtual void append(std::string_view bytes) = 0;
  [[nodiscard]] virtual std::string read_all() const = 0;
  virtual void truncate(std::size_t size) = 0;
};

class FileLogStorage final : public LogStorage {
 public:
  /// `sync` forces fdatasync after every append; without it an append is
  /// durable against process death but not against power loss.
  FileLogStorage(std::filesystem::path path, bool sync);
  ~FileLogStorage() override;
  FileLogStorage(const FileLogStorage&) = delete;
  FileLogStorage& operator=(const FileLogStorage&) = delete;

  void append(std::string_view bytes) override;
  [[nodiscard]] std::string read_all() const override;
  void truncate(std::size_t size) override;

 private:
  std::filesystem::path path_;
  bool sync_;
  int fd_ = -1;
};

class MemoryLogStorage final : public LogStorage {
 public:
  MemoryLogStorage() = default;
  explicit MemoryLogStorage(std::string initial) : bytes_(std::move(initial)) {}

  void append(std::string_view bytes) override;
  [[nodiscard]] std::string read_all() const override;
  void truncate(std::size_t size) override;

 private:
  mutable std::mutex mutex_;
  std::string bytes_;
};

/// Wraps another storage and fails appends on demand (disk full, I/O error).
class FaultInjectingStorage final : public LogStorage {
 public:
  explicit FaultInjectingStorage(std::unique_ptr<LogStorage> inner) : inner_(std::move(inner)) {}

  /// Fail every append from now on until cleared.
  void set_disk_full(bool full);
  /// Fail only the n-th append counted from now (1 = next).
  void fail_nth_append(std::uint64_t n);

  void append(std::string_view bytes) override;
  [[nodiscard]] std::string read_all() const override { return inner_->read_all(); }
  void truncate(std::size_t size) override { inner_->truncate(size); }

 private:
  std::unique_ptr<LogStorage> inner_;
  std::mutex mutex_;
  bool disk_full_ = false;
  std::uint64_t fail_countdown_ = 0;
};

struct LoadReport {
  std::vector<DomainEvent> events;
  /// Byte length of the valid prefix.
  std::size_t valid_bytes = 0;
  bool corrupted = false;
  std::string diagnostic;
};

/// Parses a log image, stopping at the first line that is garbled, truncated
/// or breaks seq continuity. Everything before it is returned.
LoadReport scan_log(std::string_view bytes);

/// Append-only, gap-free event log. Thread-safe; commits serialize on an
/// internal mutex and seqs are assigned only for appends that succeeded.
class EventLog {
 public:
  /// Loads existing content. A corrupt tail is cut off so new appends land
  /// after the last valid event; the report is kept in recovery().
  explicit EventLog(std::unique_ptr<LogStorage> storage);

  /// Throws Error(StorageFailure) when the append did not happen.
  DomainEvent commit(std::string kind, Json payload, TimePoint at);

  [[nodiscard]] std::uint64_t last_seq() const;
  [[nodiscard]] std::vector<DomainEvent> events() const;
  [[nodiscard]] std::vector<DomainEvent> events_after(std::uint64_t seq) const;
  [[nodiscard]] const LoadReport& recovery() const { return recovery_; }

 private:
  std::unique_ptr<LogStorage> storage_;
  mutable std::mutex mutex_;
  std::vector<DomainEvent> events_;
  LoadReport recovery_;
};

struct Snapshot {
  std::uint64_t as_of_seq = 0;
  Json state;
};

class SnapshotStore {
 public:
  virtual ~SnapshotStore() = default;
  virtual void save(const Snapshot& snapshot) = 0;
  [[nodiscard]] virtual std::optional<Snapshot> load() const = 0;
};

/// snapshot.json, replaced atomically via rename.
class FileSnapshotStore final : public SnapshotStore {
 public:
  explicit FileSnapshotStore(std::filesystem::path path) : path_(std::move(path)) {}
  void save(const Snapshot& snapshot) override;
  [[nodiscard]] std::optional<Snapshot> load() const override;

 private:
  std::filesystem::path path_;
};

class MemorySnapshotStore final : public SnapshotStore {
 public:
  void save(const Snapshot& snapshot) override;
  [[nodiscard]] std::optional<Snapshot> load() const override;

 private:
  mutable std::mutex mutex_;
  std::optional<Snapshot> snapshot_;
};

/// Rebuilds a state by applying every event newer than the snapshot.
/// State needs `static State from_json(const Json&)` and `void apply(const DomainEvent&)`.
template <class State>
State replay(const std::optional<Snapshot>& snapshot, const std::vector<DomainEvent>& events) {
  State state = snapshot ? State::from_json(snapshot->state) : State{};
  const std::uint64_t base = snapshot ? snapshot->as_of_seq : 0;
  for (const auto& e : events) {
    if (e.seq > base) {
      state.apply(e);
    }
  }
  return state;
}

}  // namespace rlab::persistence
