#include "rlab/collab/services.hpp"

#include "rlab/common/error.hpp"
#include "rlab/domain/permissions.hpp"

namespace rlab::collab {

std::size_t utf8_length(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    if (c < 0x80) len = 1;
    else if ((c >> 5) == 0x6) len = 2;
    else if ((c >> 4) == 0xE) len = 3;
    else if ((c >> 3) == 0x1E) len = 4;
    else throw Error(Errc::InvalidArgument, "text is not valid UTF-8");
    if (i + len > text.size()) throw Error(Errc::InvalidArgument, "text is not valid UTF-8");
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) {
        throw Error(Errc::InvalidArgument, "text is not valid UTF-8");
      }
    }
    i += len;
    ++count;
  }
  return count;
}

ChatMessage ChatService::post_message(UserId caller, GroupId group, const std::string& body) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& state = tx.state();
    require_permission(state, caller_of(state, caller), Action::PostChat, group);
    if (body.empty()) throw Error(Errc::InvalidArgument, "message body is empty");
    if (body.size() > kMaxChatCodePoints * 4 || utf8_length(body) > kMaxChatCodePoints) {
      throw Error(Errc::BodyTooLarge, "message exceeds " + std::to_string(kMaxChatCodePoints) + " characters");
    }
    ChatMessage m;
    m.id = state.next_chat_message_id();
    m.group_id = group;
    m.author = caller;
    m.body = body;
    m.at = tx.now();
    m.seq = state.last_chat_seq(group) + 1;
    tx.commit(event_kind::kChatPosted, m);
    // Published inside the write so subscribers see seq order.
    if (bus_) bus_->publish(Json{{"type", "chat"}, {"group_id", group}, {"message", m}});
    return m;
  });
}

std::vector<ChatMessage> ChatService::chat_history(UserId caller, GroupId group, std::uint64_t after_seq,
                                                   std::size_t limit) const {
  if (limit == 0) throw Error(Errc::InvalidArgument, "limit must be positive");
  return store_.read([&](const LabState& state) {
    require_permission(state, caller_of(state, caller), Action::ReadChat, group);
    std::vector<ChatMessage> out;
    const auto it = state.chat.find(group);
    if (it == state.chat.end()) return out;
    for (const auto& m : it->second) {
      if (m.seq <= after_seq) continue;
      if (out.size() == limit) break;
      out.push_back(m);
    }
    return out;
  });
}

HardwareService::HardwareService(Store& store, HardwareDriver& driver, ParticipantResolver resolver, EventBus* bus)
    : store_(store), driver_(driver), resolver_(std::move(resolver)), bus_(bus) {}

std::vector<ChannelDescriptor> HardwareService::list_channels(UserId caller, SetupId setup) const {
  return store_.read([&](const LabState& state) {
    require_permission(state, caller_of(state, caller), Action::ListChannels, setup);
    return state.require_setup(setup).hardware_channels;
  });
}

Participant HardwareService::admit(SetupId setup, const std::string& token, Action action) const {
  const auto who = resolver_ ? resolver_(token, store_.clock().now()) : std::nullopt;
  if (!who) throw Error(Errc::TokenInvalid, "participant token not valid");
  store_.read([&](const LabState& state) {
    const auto sit = state.sessions.find(who->session);
    if (sit == state.sessions.end()) throw Error(Errc::TokenInvalid, "token session unknown");
    const auto& booking = state.require_booking(sit->second.booking_id);
    if (state.require_slot(booking.slot_id).setup_id != setup) {
      throw Error(Errc::TokenInvalid, "token is for a session on another setup");
    }
    (void)state.require_setup(setup);
    require_permission(state, caller_of(state, who->user), action, who->session);
    return 0;
  });
  return *who;
}

ChannelDescriptor HardwareService::channel(SetupId setup, const std::string& channel_id, ChannelKind kind) const {
  return store_.read([&](const LabState& state) {
    const auto* ch = state.require_setup(setup).find_channel(channel_id);
    if (!ch) throw Error(Errc::UnknownChannel, "no channel " + channel_id + " on setup " + setup.str());
    if (ch->kind != kind) throw Error(Errc::KindMismatch, "channel " + channel_id + " has the wrong kind");
    return *ch;
  });
}

std::mutex& HardwareService::channel_mutex(SetupId setup, const std::string& channel_id) {
  std::lock_guard lock(channels_mutex_);
  auto& m = channel_mutexes_[{setup, channel_id}];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

SensorReading HardwareService::read_sensor(SetupId setup, const std::string& channel_id, const std::string& token) {
  admit(setup, token, Action::ReadSensor);
  const auto ch = channel(setup, channel_id, ChannelKind::Sensor);
  const auto at = store_.clock().now();
  SensorReading r{driver_.read(setup, ch, at), at};
  if (bus_) {
    bus_->publish(Json{{"type", "sensor"}, {"setup_id", setup}, {"channel_id", channel_id},
                       {"value", channel_value_to_json(r.value)}, {"at", at}});
  }
  return r;
}

SensorReading HardwareService::actuator_state(SetupId setup, const std::string& channel_id, const std::string& token) {
  admit(setup, token, Action::ReadSensor);
  const auto ch = channel(setup, channel_id, ChannelKind::Actuator);
  const auto at = store_.clock().now();
  return {driver_.read(setup, ch, at), at};
}

ChannelValue HardwareService::set_actuator(SetupId setup, const std::string& channel_id, const ChannelValue& value,
                                           const std::string& token) {
  const auto who = admit(setup, token, Action::WriteActuator);
  const auto ch = channel(setup, channel_id, ChannelKind::Actuator);
  if (ch.datatype == ChannelDatatype::Bool) {
    if (!std::holds_alternative<bool>(value)) throw Error(Errc::InvalidArgument, "channel expects a bool");
  } else {
    if (!std::holds_alternative<double>(value)) throw Error(Errc::InvalidArgument, "channel expects a number");
    const double v = std::get<double>(value);
    if (!(v >= ch.min && v <= ch.max)) {
      throw Error(Errc::OutOfBounds, "value outside [" + std::to_string(ch.min) + ", " + std::to_string(ch.max) + "]");
    }
  }
  std::lock_guard serial(channel_mutex(setup, channel_id));
  const auto applied = driver_.write(setup, ch, value);
  store_.write([&](Store::Transaction& tx) {
    const ActuatorWrite w{setup, channel_id, applied, who.user, tx.now()};
    tx.commit(event_kind::kActuatorWritten, w);
    if (bus_) {
      bus_->publish(Json{{"type", "actuator"}, {"setup_id", setup}, {"channel_id", channel_id},
                         {"session_id", who.session}, {"value", channel_value_to_json(applied)},
                         {"author", who.user}, {"at", w.at}});
    }
    return 0;
  });
  return applied;
}

std::string RoomManager::ensure_room(SessionId session) {
  std::lock_guard lock(mutex_);
  if (const auto it = rooms_.find(session); it != rooms_.end()) return it->second;
  auto room = adapter_.create_room(session);
  rooms_.emplace(session, room);
  return room;
}

void RoomManager::release_room(SessionId session) {
  std::lock_guard lock(mutex_);
  const auto it = rooms_.find(session);
  if (it == rooms_.end()) return;
  adapter_.destroy_room(it->second);
  rooms_.erase(it);
}

std::optional<std::string> RoomManager::room_of(SessionId session) const {
  std::lock_guard lock(mutex_);
  const auto it = rooms_.find(session);
  if (it == rooms_.end()) return std::nullopt;
  return it->second;
}

std::size_t RoomManager::live_rooms() const {
  std::lock_guard lock(mutex_);
  return rooms_.size();
}

}  // namespace rlab::collab
