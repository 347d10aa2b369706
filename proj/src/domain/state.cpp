#include "rlab/domain/state.hpp"

#include <algorithm>

#include "rlab/common/error.hpp"

namespace rlab {

namespace {

template <class Map>
auto next_key(const Map& m) {
  using Key = typename Map::key_type;
  return m.empty() ? Key{1} : Key{m.rbegin()->first.value + 1};
}

template <class Map, class Key>
const auto& require(const Map& m, Key id, const char* what) {
  const auto it = m.find(id);
  if (it == m.end()) {
    throw Error(Errc::NotFound, std::string(what) + " " + id.str() + " not found");
  }
  return it->second;
}

template <class T>
T field(const Json& j, const char* key) {
  return j.at(key).get<T>();
}

}  // namespace

void validate_event_payload(const std::string& kind, const Json& p) {
  using namespace event_kind;
  try {
    if (kind == kUserCreated) {
      (void)p.get<User>();
    } else if (kind == kCourseCreated) {
      (void)p.get<Course>();
    } else if (kind == kStudentEnrolled) {
      (void)field<CourseId>(p, "course_id");
      (void)field<UserId>(p, "student_id");
    } else if (kind == kGroupCreated) {
      (void)p.get<Group>();
    } else if (kind == kImageRegistered) {
      (void)p.get<ImageRecord>();
    } else if (kind == kSetupRegistered) {
      (void)p.get<LabSetup>();
    } else if (kind == kSetupLinked) {
      (void)field<CourseId>(p, "course_id");
      (void)field<SetupId>(p, "setup_id");
    } else if (kind == kSlotsGenerated) {
      (void)field<SetupId>(p, "setup_id");
      (void)field<std::vector<TimeSlot>>(p, "slots");
    } else if (kind == kBookingCreated) {
      (void)p.get<Booking>();
    } else if (kind == kBookingCancelled) {
      (void)field<BookingId>(p, "booking_id");
      (void)field<UserId>(p, "by");
    } else if (kind == kSessionStarted) {
      (void)p.get<SessionRecord>();
    } else if (kind == kParticipantJoined) {
      (void)field<SessionId>(p, "session_id");
      (void)field<UserId>(p, "user_id");
    } else if (kind == kSessionEnded) {
      (void)field<SessionId>(p, "session_id");
      (void)field<TimePoint>(p, "ended_at");
      (void)field<std::string>(p, "reason");
    } else if (kind == kChatPosted) {
      (void)p.get<ChatMessage>();
    } else if (kind == kActuatorWritten) {
      (void)p.get<ActuatorWrite>();
    } else {
      throw Error(Errc::InvalidArgument, "unknown event kind: " + kind);
    }
  } catch (const Json::exception& ex) {
    throw Error(Errc::InvalidArgument, "payload for " + kind + " invalid: " + ex.what());
  }
}

void LabState::apply(const persistence::DomainEvent& event) {
  using namespace event_kind;
  const auto& kind = event.kind;
  const auto& p = event.payload;

  if (kind == kUserCreated) {
    auto u = p.get<User>();
    users[u.id] = std::move(u);
  } else if (kind == kCourseCreated) {
    auto c = p.get<Course>();
    courses[c.id] = std::move(c);
  } else if (kind == kStudentEnrolled) {
    courses.at(p.at("course_id").get<CourseId>()).student_ids.insert(p.at("student_id").get<UserId>());
  } else if (kind == kGroupCreated) {
    auto g = p.get<Group>();
    groups[g.id] = std::move(g);
  } else if (kind == kImageRegistered) {
    auto img = p.get<ImageRecord>();
    images[img.digest] = std::move(img);
  } else if (kind == kSetupRegistered) {
    auto s = p.get<LabSetup>();
    slots_by_setup[s.id];
    setups[s.id] = std::move(s);
  } else if (kind == kSetupLinked) {
    courses.at(p.at("course_id").get<CourseId>()).setup_ids.insert(p.at("setup_id").get<SetupId>());
  } else if (kind == kSlotsGenerated) {
    auto& index = slots_by_setup[p.at("setup_id").get<SetupId>()];
    for (auto slot : p.at("slots").get<std::vector<TimeSlot>>()) {
      index.push_back(slot.id);
      slots[slot.id] = slot;
    }
    std::sort(index.begin(), index.end(),
              [this](SlotId a, SlotId b) { return slots.at(a).start < slots.at(b).start; });
  } else if (kind == kBookingCreated) {
    auto b = p.get<Booking>();
    if (b.state == BookingState::Active) {
      active_booking_by_slot[b.slot_id] = b.id;
    }
    bookings[b.id] = std::move(b);
  } else if (kind == kBookingCancelled) {
    auto& b = bookings.at(p.at("booking_id").get<BookingId>());
    b.state = BookingState::Cancelled;
    if (auto it = active_booking_by_slot.find(b.slot_id); it != active_booking_by_slot.end() &&
                                                          it->second == b.id) {
      active_booking_by_slot.erase(it);
    }
  } else if (kind == kSessionStarted) {
    auto s = p.get<SessionRecord>();
    sessions[s.id] = std::move(s);
  } else if (kind == kParticipantJoined) {
    sessions.at(p.at("session_id").get<SessionId>()).participants.insert(p.at("user_id").get<UserId>());
  } else if (kind == kSessionEnded) {
    auto& s = sessions.at(p.at("session_id").get<SessionId>());
    s.state = SessionState::Ended;
    s.ended_at = p.at("ended_at").get<TimePoint>();
    s.end_reason = p.at("reason").get<std::string>();
  } else if (kind == kChatPosted) {
    auto m = p.get<ChatMessage>();
    last_chat_id_ = std::max(last_chat_id_, m.id.value);
    chat[m.group_id].push_back(std::move(m));
  } else if (kind == kActuatorWritten) {
    actuator_audit.push_back(p.get<ActuatorWrite>());
  } else {
    throw Error(Errc::CorruptLog, "unknown event kind in log: " + kind);
  }
}

Json LabState::to_json() const {
  auto values = [](const auto& m) {
    Json arr = Json::array();
    for (const auto& [k, v] : m) {
      arr.push_back(v);
    }
    return arr;
  };
  Json chat_json = Json::array();
  for (const auto& [g, msgs] : chat) {
    for (const auto& m : msgs) {
      chat_json.push_back(m);
    }
  }
  return Json{{"users", values(users)},       {"courses", values(courses)},
              {"groups", values(groups)},     {"images", values(images)},
              {"setups", values(setups)},     {"slots", values(slots)},
              {"bookings", values(bookings)}, {"sessions", values(sessions)},
              {"chat", chat_json},            {"actuator_audit", actuator_audit}};
}

LabState LabState::from_json(const Json& j) {
  LabState s;
  for (auto u : j.at("users").get<std::vector<User>>()) s.users[u.id] = std::move(u);
  for (auto c : j.at("courses").get<std::vector<Course>>()) s.courses[c.id] = std::move(c);
  for (auto g : j.at("groups").get<std::vector<Group>>()) s.groups[g.id] = std::move(g);
  for (auto i : j.at("images").get<std::vector<ImageRecord>>()) s.images[i.digest] = std::move(i);
  for (auto x : j.at("setups").get<std::vector<LabSetup>>()) s.setups[x.id] = std::move(x);
  for (auto t : j.at("slots").get<std::vector<TimeSlot>>()) s.slots[t.id] = t;
  for (auto b : j.at("bookings").get<std::vector<Booking>>()) s.bookings[b.id] = b;
  for (auto r : j.at("sessions").get<std::vector<SessionRecord>>()) s.sessions[r.id] = std::move(r);
  for (auto m : j.at("chat").get<std::vector<ChatMessage>>()) {
    s.last_chat_id_ = std::max(s.last_chat_id_, m.id.value);
    s.chat[m.group_id].push_back(std::move(m));
  }
  s.actuator_audit = j.at("actuator_audit").get<std::vector<ActuatorWrite>>();
  s.rebuild_indexes();
  return s;
}

void LabState::rebuild_indexes() {
  active_booking_by_slot.clear();
  slots_by_setup.clear();
  for (const auto& [id, setup] : setups) {
    slots_by_setup[id];
  }
  for (const auto& [id, slot] : slots) {
    slots_by_setup[slot.setup_id].push_back(id);
  }
  for (auto& [setup, ids] : slots_by_setup) {
    std::sort(ids.begin(), ids.end(),
              [this](SlotId a, SlotId b) { return slots.at(a).start < slots.at(b).start; });
  }
  for (const auto& [id, b] : bookings) {
    if (b.state == BookingState::Active) {
      active_booking_by_slot[b.slot_id] = id;
    }
  }
  for (auto& [g, msgs] : chat) {
    std::sort(msgs.begin(), msgs.end(),
              [](const ChatMessage& a, const ChatMessage& b) { return a.seq < b.seq; });
  }
}

UserId LabState::next_user_id() const { return next_key(users); }
CourseId LabState::next_course_id() const { return next_key(courses); }
GroupId LabState::next_group_id() const { return next_key(groups); }
SetupId LabState::next_setup_id() const { return next_key(setups); }
SlotId LabState::next_slot_id() const { return next_key(slots); }
BookingId LabState::next_booking_id() const { return next_key(bookings); }
SessionId LabState::next_session_id() const { return next_key(sessions); }
ChatMessageId LabState::next_chat_message_id() const { return ChatMessageId{last_chat_id_ + 1}; }

const User& LabState::require_user(UserId id) const { return require(users, id, "user"); }
const Course& LabState::require_course(CourseId id) const { return require(courses, id, "course"); }
const Group& LabState::require_group(GroupId id) const { return require(groups, id, "group"); }
const LabSetup& LabState::require_setup(SetupId id) const { return require(setups, id, "setup"); }
const TimeSlot& LabState::require_slot(SlotId id) const { return require(slots, id, "slot"); }
const Booking& LabState::require_booking(BookingId id) const {
  return require(bookings, id, "booking");
}
const SessionRecord& LabState::require_session(SessionId id) const {
  return require(sessions, id, "session");
}

const User* LabState::find_user_by_name(const std::string& name, Role role) const {
  for (const auto& [id, u] : users) {
    if (u.display_name == name && u.role == role) {
      return &u;
    }
  }
  return nullptr;
}

std::optional<GroupId> LabState::group_of(CourseId course, UserId student) const {
  for (const auto& [id, g] : groups) {
    if (g.course_id == course && g.has_member(student)) {
      return id;
    }
  }
  return std::nullopt;
}

bool LabState::setup_linked_to_course(SetupId setup, CourseId course) const {
  const auto it = courses.find(course);
  return it != courses.end() && it->second.setup_ids.contains(setup);
}

std::optional<BookingId> LabState::active_booking_for(SlotId slot) const {
  const auto it = active_booking_by_slot.find(slot);
  if (it == active_booking_by_slot.end()) {
    return std::nullopt;
  }
  return it->second;
}

const SessionRecord* LabState::live_session_for(BookingId booking) const {
  for (const auto& [id, s] : sessions) {
    if (s.booking_id == booking && s.state != SessionState::Ended) {
      return &s;
    }
  }
  return nullptr;
}

std::uint64_t LabState::last_chat_seq(GroupId group) const {
  const auto it = chat.find(group);
  return it == chat.end() || it->second.empty() ? 0 : it->second.back().seq;
}

}  // namespace rlab
