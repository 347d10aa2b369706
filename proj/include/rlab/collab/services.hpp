#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rlab/collab/adapters.hpp"
#include "rlab/collab/event_bus.hpp"
#include "rlab/domain/permissions.hpp"
#include "rlab/domain/store.hpp"

namespace rlab::collab {

inline constexpr std::size_t kMaxChatCodePoints = 4096;

/// Number of Unicode code points in UTF-8 text; throws InvalidArgument for
/// malformed input.
std::size_t utf8_length(std::string_view text);

/// Per-group chat that outlives sessions.
class ChatService {
 public:
  ChatService(Store& store, EventBus* bus = nullptr) : store_(store), bus_(bus) {}

  /// Throws PermissionDenied, InvalidArgument (empty body) or BodyTooLarge.
  ChatMessage post_message(UserId caller, GroupId group, const std::string& body);
  /// Messages with seq > after_seq in ascending order, at most `limit`.
  std::vector<ChatMessage> chat_history(UserId caller, GroupId group, std::uint64_t after_seq,
                                        std::size_t limit) const;

 private:
  Store& store_;
  EventBus* bus_;
};

struct Participant {
  SessionId session;
  UserId user;
};

/// Maps a participant token to its holder if the token is currently valid.
using ParticipantResolver = std::function<std::optional<Participant>(const std::string& token, TimePoint now)>;

struct SensorReading {
  ChannelValue value;
  TimePoint at{};
};

/// Sensor reads and actuator writes for participants of a session running
/// on the setup. Writes to one channel are serialized; each applied write is
/// committed to the audit log in the same order the driver saw it.
class HardwareService {
 public:
  HardwareService(Store& store, HardwareDriver& driver, ParticipantResolver resolver, EventBus* bus = nullptr);

  std::vector<ChannelDescriptor> list_channels(UserId caller, SetupId setup) const;
  /// Throws TokenInvalid, UnknownChannel, KindMismatch.
  SensorReading read_sensor(SetupId setup, const std::string& channel_id, const std::string& token);
  /// Throws TokenInvalid, UnknownChannel, KindMismatch, InvalidArgument
  /// (wrong datatype), OutOfBounds.
  ChannelValue set_actuator(SetupId setup, const std::string& channel_id, const ChannelValue& value,
                            const std::string& token);
  /// Latched value of an actuator.
  SensorReading actuator_state(SetupId setup, const std::string& channel_id, const std::string& token);

 private:
  Participant admit(SetupId setup, const std::string& token, Action action) const;
  ChannelDescriptor channel(SetupId setup, const std::string& channel_id, ChannelKind kind) const;
  std::mutex& channel_mutex(SetupId setup, const std::string& channel_id);

  Store& store_;
  HardwareDriver& driver_;
  ParticipantResolver resolver_;
  EventBus* bus_;
  std::mutex channels_mutex_;
  std::map<std::pair<SetupId, std::string>, std::unique_ptr<std::mutex>> channel_mutexes_;
};

/// Exactly one conference room per session while it lives.
class RoomManager {
 public:
  explicit RoomManager(ConferenceAdapter& adapter) : adapter_(adapter) {}

  /// Returns the existing room or creates one. Throws AdapterFailure.
  std::string ensure_room(SessionId session);
  /// No-op without a room. Throws AdapterFailure and keeps the room tracked
  /// when the adapter refuses.
  void release_room(SessionId session);
  [[nodiscard]] std::optional<std::string> room_of(SessionId session) const;
  [[nodiscard]] std::size_t live_rooms() const;
  [[nodiscard]] std::string join_url(const std::string& room) const { return adapter_.join_url(room); }

 private:
  ConferenceAdapter& adapter_;
  mutable std::mutex mutex_;
  std::map<SessionId, std::string> rooms_;
};

}  // namespace rlab::collab
