#include "rlab/persistence/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rlab/common/error.hpp"

namespace rlab::persistence {

std::string encode_event(const DomainEvent& event) {
  Json j;
  j["seq"] = event.seq;
  j["at"] = event.at;
  j["kind"] = event.kind;
  j["payload"] = event.payload;
  return j.dump();
}

DomainEvent decode_event(std::string_view line) {
  const Json j = Json::parse(line);
  DomainEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.at = j.at("at").get<TimePoint>();
  e.kind = j.at("kind").get<std::string>();
  e.payload = j.at("payload");
  return e;
}

// ---------------------------------------------------------------------------

FileLogStorage::FileLogStorage(std::filesystem::path path, bool sync)
    : path_(std::move(path)), sync_(sync) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(Errc::StorageFailure, "cannot open " + path_.string() + ": " + std::strerror(errno));
  }
}

FileLogStorage::~FileLogStorage() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

void FileLogStorage::append(std::string_view bytes) {
  const off_t before = ::lseek(fd_, 0, SEEK_END);
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd_, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      const std::string reason = std::strerror(errno);
      if (before >= 0 && ::ftruncate(fd_, before) != 0) {
        // Tail may now hold a partial line; scan_log cuts it on next open.
      }
      throw Error(Errc::StorageFailure, "append to " + path_.string() + " failed: " + reason);
    }
    written += static_cast<std::size_t>(n);
  }
  if (sync_ && ::fdatasync(fd_) != 0) {
    throw Error(Errc::StorageFailure, "fdatasync failed: " + std::string(std::strerror(errno)));
  }
}

std::string FileLogStorage::read_all() const {
  std::ifstream in(path_, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void FileLogStorage::truncate(std::size_t size) {
  if (::ftruncate(fd_, static_cast<off_t>(size)) != 0) {
    throw Error(Errc::StorageFailure, "truncate failed: " + std::string(std::strerror(errno)));
  }
}

void MemoryLogStorage::append(std::string_view bytes) {
  std::lock_guard lock(mutex_);
  bytes_.append(bytes);
}

std::string MemoryLogStorage::read_all() const {
  std::lock_guard lock(mutex_);
  return bytes_;
}

void MemoryLogStorage::truncate(std::size_t size) {
  std::lock_guard lock(mutex_);
  bytes_.resize(std::min(size, bytes_.size()));
}

void FaultInjectingStorage::set_disk_full(bool full) {
  std::lock_guard lock(mutex_);
  disk_full_ = full;
}

void FaultInjectingStorage::fail_nth_append(std::uint64_t n) {
  std::lock_guard lock(mutex_);
  fail_countdown_ = n;
}

void FaultInjectingStorage::append(std::string_view bytes) {
  {
    std::lock_guard lock(mutex_);
    if (disk_full_) {
      throw Error(Errc::StorageFailure, "injected: disk full");
    }
    if (fail_countdown_ > 0 && --fail_countdown_ == 0) {
      throw Error(Errc::StorageFailure, "injected: append failure");
    }
  }
  inner_->append(bytes);
}

// ---------------------------------------------------------------------------

LoadReport scan_log(std::string_view bytes) {
  LoadReport report;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) {
      report.corrupted = true;
      report.diagnostic = "truncated final line at byte " + std::to_string(pos);
      break;
    }
    const auto line = bytes.substr(pos, nl - pos);
    DomainEvent e;
    try {
      e = decode_event(line);
    } catch (const std::exception& ex) {
      report.corrupted = true;
      report.diagnostic = "garbled line at byte " + std::to_string(pos) + ": " + ex.what();
      break;
    }
    const std::uint64_t expected = report.events.size() + 1;
    if (e.seq != expected) {
      report.corrupted = true;
      report.diagnostic = "seq " + std::to_string(e.seq) + " where " + std::to_string(expected) +
                          " was expected";
      break;
    }
    report.events.push_back(std::move(e));
    pos = nl + 1;
    report.valid_bytes = pos;
  }
  return report;
}

EventLog::EventLog(std::unique_ptr<LogStorage> storage) : storage_(std::move(storage)) {
  recovery_ = scan_log(storage_->read_all());
  if (recovery_.corrupted) {
    storage_->truncate(recovery_.valid_bytes);
  }
  events_ = recovery_.events;
}

DomainEvent EventLog::commit(std::string kind, Json payload, TimePoint at) {
  std::lock_guard lock(mutex_);
  DomainEvent e{events_.size() + 1, at, std::move(kind), std::move(payload)};
  std::string line = encode_event(e);
  line.push_back('\n');
  storage_->append(line);
  events_.push_back(e);
  return e;
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::vector<DomainEvent> EventLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

std::vector<DomainEvent> EventLog::events_after(std::uint64_t seq) const {
  std::lock_guard lock(mutex_);
  if (seq >= events_.size()) {
    return {};
  }
  return {events_.begin() + static_cast<std::ptrdiff_t>(seq), events_.end()};
}

// ---------------------------------------------------------------------------

void FileSnapshotStore::save(const Snapshot& snapshot) {
  const Json doc{{"as_of_seq", snapshot.as_of_seq}, {"state", snapshot.state}};
  auto tmp = path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << doc.dump() << '\n';
    out.flush();
    if (!out) {
      throw Error(Errc::StorageFailure, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path_, ec);
  if (ec) {
    throw Error(Errc::StorageFailure, "cannot replace " + path_.string() + ": " + ec.message());
  }
}

std::optional<Snapshot> FileSnapshotStore::load() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    return std::nullopt;
  }
  try {
    const Json doc = Json::parse(in);
    return Snapshot{doc.at("as_of_seq").get<std::uint64_t>(), doc.at("state")};
  } catch (const Json::exception& ex) {
    throw Error(Errc::CorruptLog, "unreadable snapshot " + path_.string() + ": " + ex.what());
  }
}

void MemorySnapshotStore::save(const Snapshot& snapshot) {
  std::lock_guard lock(mutex_);
  snapshot_ = snapshot;
}

std::optional<Snapshot> MemorySnapshotStore::load() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

}  // namespace rlab::persistence
