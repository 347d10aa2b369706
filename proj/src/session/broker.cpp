#include "rlab/session/broker.hpp"

#include "rlab/common/crypto.hpp"
#include "rlab/common/error.hpp"
#include "rlab/domain/permissions.hpp"

namespace rlab::session {

void to_json(Json& j, const ParticipantToken& v) {
  j = Json{{"token", v.token}, {"session_id", v.session}, {"user_id", v.user}, {"expires_at", v.expires_at}};
}

void to_json(Json& j, const SessionDescriptor& v) {
  j = Json{{"session_id", v.session},
           {"setup_id", v.setup},
           {"chat_group_id", v.chat_group},
           {"relay_url", v.relay_url},
           {"conference_room", v.conference_room},
           {"conference_url", v.conference_url},
           {"camera_url", v.camera_url},
           {"channels", v.channels},
           {"expires_at", v.expires_at}};
}

SessionBroker::SessionBroker(Store& store, vm::VmPool& pool, collab::RoomManager& rooms, relay::Relay& relay,
                             collab::EventBus* bus, BrokerConfig config)
    : store_(store), pool_(pool), rooms_(rooms), relay_(relay), bus_(bus), config_(config) {}

std::shared_ptr<std::mutex> SessionBroker::session_mutex(SessionId session) {
  std::lock_guard lock(mutex_);
  auto& m = session_mutexes_[session];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

void SessionBroker::publish_state(const SessionRecord& record, GroupId group) {
  if (!bus_) return;
  bus_->publish(Json{{"type", "session"},
                     {"session_id", record.id},
                     {"booking_id", record.booking_id},
                     {"group_id", group},
                     {"state", record.state}});
}

SessionRecord SessionBroker::start_session(UserId caller, BookingId booking_id, TimePoint now) {
  struct Plan {
    SetupId setup;
    GroupId group;
    TimePoint slot_end;
  };
  const auto plan = store_.read([&](const LabState& state) {
    const auto& booking = state.require_booking(booking_id);
    require_permission(state, caller_of(state, caller), Action::StartSession, booking_id);
    if (booking.state != BookingState::Active) throw Error(Errc::InvalidState, "booking is cancelled");
    const auto& slot = state.require_slot(booking.slot_id);
    if (now < slot.start - config_.early_grace) throw Error(Errc::TooEarly, "slot has not started yet");
    if (now >= slot.end()) throw Error(Errc::TooLate, "slot is over");
    if (state.live_session_for(booking_id)) throw Error(Errc::AlreadyStarted, "booking already has a session");
    return Plan{slot.setup_id, booking.group_id, slot.end()};
  });

  {
    std::lock_guard lock(mutex_);
    if (!starting_.insert(booking_id).second) {
      throw Error(Errc::AlreadyStarted, "booking is being started");
    }
  }
  struct Release {
    SessionBroker& b;
    BookingId id;
    ~Release() {
      std::lock_guard lock(b.mutex_);
      b.starting_.erase(id);
    }
  } release{*this, booking_id};

  // Re-check under the reservation: a start may have committed in between.
  store_.read([&](const LabState& state) {
    if (state.live_session_for(booking_id)) throw Error(Errc::AlreadyStarted, "booking already has a session");
    return 0;
  });

  const SessionId sid = store_.reserve_session_id();
  const auto vm = pool_.acquire_vm(plan.setup, sid, plan.slot_end);
  std::optional<std::string> room;
  bool upstream = false;
  try {
    room = rooms_.ensure_room(sid);
    relay_.open_upstream(sid, vm.desktop_endpoint);
    upstream = true;
    SessionRecord record;
    record.id = sid;
    record.booking_id = booking_id;
    record.vm_id = vm.id;
    record.conference_room = *room;
    record.state = SessionState::Active;
    record.started_at = now;
    store_.write([&](Store::Transaction& tx) {
      tx.commit(event_kind::kSessionStarted, record);
      return 0;
    });
    publish_state(record, plan.group);
    return record;
  } catch (...) {
    if (upstream) relay_.close_session_channels(sid);
    if (room) {
      try {
        rooms_.release_room(sid);
      } catch (const Error&) {
        std::lock_guard lock(mutex_);
        stale_rooms_.push_back(sid);
      }
    }
    try {
      pool_.release_and_reset(vm.id);
    } catch (const Error&) {
      // Left Failed; the pool sweep retries it.
    }
    throw;
  }
}

ParticipantToken SessionBroker::join_session(UserId caller, SessionId session, TimePoint now) {
  const auto m = session_mutex(session);
  std::lock_guard serial(*m);
  struct Admission {
    TimePoint expires_at;
    bool member;
  };
  const auto admission = store_.read([&](const LabState& state) {
    const auto& record = state.require_session(session);
    const auto& who = caller_of(state, caller);
    if (record.state != SessionState::Active) throw Error(Errc::SessionNotActive, "session is not active");
    if (decide(state, who, Action::JoinSession, session) == Decision::Deny) {
      throw Error(Errc::NotParticipantEligible, "user may not join this session");
    }
    const auto& booking = state.require_booking(record.booking_id);
    const auto& slot = state.require_slot(booking.slot_id);
    return Admission{slot.end() + config_.token_grace, record.participants.contains(caller)};
  });
  if (now >= admission.expires_at) throw Error(Errc::SessionNotActive, "session window is over");
  if (!admission.member) {
    store_.write([&](Store::Transaction& tx) {
      tx.commit(event_kind::kParticipantJoined, Json{{"session_id", session}, {"user_id", caller}});
      return 0;
    });
  }
  ParticipantToken token{crypto::random_token(config_.token_bytes), session, caller, admission.expires_at};
  std::lock_guard lock(mutex_);
  tokens_.emplace(token.token, token);
  return token;
}

SessionRecord SessionBroker::end_session(UserId caller, SessionId session, TimePoint now) {
  store_.read([&](const LabState& state) {
    (void)state.require_session(session);
    require_permission(state, caller_of(state, caller), Action::EndSession, session);
    return 0;
  });
  return teardown(session, now, "ended");
}

SessionRecord SessionBroker::teardown(SessionId session, TimePoint now, const std::string& reason) {
  const auto m = session_mutex(session);
  std::lock_guard serial(*m);
  const auto [record, group] = store_.read([&](const LabState& state) {
    const auto& r = state.require_session(session);
    return std::pair{r, state.require_booking(r.booking_id).group_id};
  });
  if (record.state == SessionState::Ended) return record;

  {
    std::lock_guard lock(mutex_);
    std::erase_if(tokens_, [&](const auto& kv) { return kv.second.session == session; });
  }
  relay_.close_session_channels(session);
  try {
    rooms_.release_room(session);
  } catch (const Error&) {
    std::lock_guard lock(mutex_);
    stale_rooms_.push_back(session);
  }
  try {
    pool_.release_and_reset(record.vm_id);
  } catch (const Error&) {
    // DriverFailure leaves the VM Failed for the sweep; InvalidState means
    // a sweep got there first.
  }
  store_.write([&](Store::Transaction& tx) {
    tx.commit(event_kind::kSessionEnded, Json{{"session_id", session}, {"ended_at", now}, {"reason", reason}});
    return 0;
  });
  auto ended = store_.read([&](const LabState& state) { return state.require_session(session); });
  publish_state(ended, group);
  return ended;
}

SessionDescriptor SessionBroker::session_descriptor(SessionId session, const std::string& token,
                                                    TimePoint now) const {
  const auto who = validate_token(token, now);
  if (!who || who->session != session) throw Error(Errc::TokenInvalid, "token not valid for this session");
  ParticipantToken held;
  {
    std::lock_guard lock(mutex_);
    held = tokens_.at(token);
  }
  return store_.read([&](const LabState& state) {
    const auto& record = state.require_session(session);
    const auto& booking = state.require_booking(record.booking_id);
    const auto& setup = state.require_setup(state.require_slot(booking.slot_id).setup_id);
    SessionDescriptor d;
    d.session = session;
    d.setup = setup.id;
    d.chat_group = booking.group_id;
    d.relay_url = "/ws/relay/" + session.str() + "?token=" + token;
    d.conference_room = record.conference_room;
    d.conference_url = rooms_.join_url(record.conference_room);
    d.camera_url = "/stream/camera/" + session.str() + "?token=" + token;
    d.channels = setup.hardware_channels;
    d.expires_at = held.expires_at;
    return d;
  });
}

std::optional<collab::Participant> SessionBroker::validate_token(const std::string& token, TimePoint now) const {
  std::lock_guard lock(mutex_);
  const auto it = tokens_.find(token);
  if (it == tokens_.end() || now >= it->second.expires_at) return std::nullopt;
  return collab::Participant{it->second.session, it->second.user};
}

BrokerSweep SessionBroker::sweep(TimePoint now) {
  BrokerSweep out;
  const auto due = store_.read([&](const LabState& state) {
    std::vector<SessionId> ids;
    for (const auto& [id, s] : state.sessions) {
      if (s.state == SessionState::Ended) continue;
      const auto& slot = state.require_slot(state.require_booking(s.booking_id).slot_id);
      if (now >= slot.end() + config_.end_grace) ids.push_back(id);
    }
    return ids;
  });
  for (const auto id : due) {
    const auto record = teardown(id, now, "expired");
    if (record.end_reason == "expired") out.ended.push_back(id);
  }
  std::vector<SessionId> rooms;
  {
    std::lock_guard lock(mutex_);
    rooms.swap(stale_rooms_);
  }
  for (const auto id : rooms) {
    try {
      rooms_.release_room(id);
    } catch (const Error&) {
      std::lock_guard lock(mutex_);
      stale_rooms_.push_back(id);
    }
  }
  {
    std::lock_guard lock(mutex_);
    std::erase_if(tokens_, [&](const auto& kv) { return now >= kv.second.expires_at; });
  }
  out.vms = pool_.scheduled_sweep(now, [&](SessionId id) {
    return store_.read([&](const LabState& state) {
      const auto it = state.sessions.find(id);
      // A reserved id without a committed session belongs to a start in
      // progress; leave its VM alone.
      return it == state.sessions.end() || it->second.state != SessionState::Ended;
    });
  });
  return out;
}

std::vector<SessionId> SessionBroker::recover(TimePoint now) {
  std::vector<SessionId> ended;
  store_.write([&](Store::Transaction& tx) {
    std::vector<SessionId> live;
    for (const auto& [id, s] : tx.state().sessions) {
      if (s.state != SessionState::Ended) live.push_back(id);
    }
    for (const auto id : live) {
      tx.commit(event_kind::kSessionEnded, Json{{"session_id", id}, {"ended_at", now}, {"reason", "recovered"}});
      ended.push_back(id);
    }
    return 0;
  });
  return ended;
}

std::size_t SessionBroker::live_tokens() const {
  std::lock_guard lock(mutex_);
  return tokens_.size();
}

}  // namespace rlab::session
