#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rlab/collab/event_bus.hpp"
#include "rlab/collab/services.hpp"
#include "rlab/domain/store.hpp"
#include "rlab/relay/relay.hpp"
#include "rlab/vm/pool.hpp"

namespace rlab::session {

struct BrokerConfig {
  /// A session may start this long before its slot.
  Minutes early_grace{5};
  /// Tokens expire this long after slot end.
  Minutes token_grace{5};
  /// The sweep ends sessions this long after slot end.
  Minutes end_grace{5};
  std::size_t token_bytes = 32;
};

struct ParticipantToken {
  std::string token;
  SessionId session;
  UserId user;
  TimePoint expires_at{};
};

/// Everything a dashboard needs to assemble the workspace.
struct SessionDescriptor {
  SessionId session;
  SetupId setup;
  GroupId chat_group;
  std::string relay_url;
  std::string conference_room;
  std::string conference_url;
  std::string camera_url;
  std::vector<ChannelDescriptor> channels;
  TimePoint expires_at{};
};

void to_json(Json& j, const ParticipantToken& v);
void to_json(Json& j, const SessionDescriptor& v);

struct BrokerSweep {
  std::vector<SessionId> ended;
  std::vector<vm::SweepOutcome> vms;
};

/// Turns bookings into live sessions: VM, conference room and relay upstream
/// are acquired in that order and released in reverse on failure.
class SessionBroker {
 public:
  SessionBroker(Store& store, vm::VmPool& pool, collab::RoomManager& rooms, relay::Relay& relay,
                collab::EventBus* bus = nullptr, BrokerConfig config = {});

  /// Throws NotFound, PermissionDenied, InvalidState (booking cancelled),
  /// TooEarly, TooLate, AlreadyStarted, PoolExhausted, DriverFailure,
  /// AdapterFailure, ConnectFailed. Nothing is kept on failure.
  SessionRecord start_session(UserId caller, BookingId booking, TimePoint now);
  /// Throws NotFound, SessionNotActive, NotParticipantEligible.
  ParticipantToken join_session(UserId caller, SessionId session, TimePoint now);
  /// Idempotent: an Ended session is returned as is. Throws NotFound or
  /// PermissionDenied.
  SessionRecord end_session(UserId caller, SessionId session, TimePoint now);
  /// Throws TokenInvalid.
  SessionDescriptor session_descriptor(SessionId session, const std::string& token, TimePoint now) const;

  [[nodiscard]] std::optional<collab::Participant> validate_token(const std::string& token, TimePoint now) const;
  /// Ends sessions past slot end plus grace, retries failed room releases,
  /// then sweeps the VM pool.
  BrokerSweep sweep(TimePoint now);
  /// Marks sessions left live by a previous process as ended; their VMs,
  /// rooms and connections did not survive the restart.
  std::vector<SessionId> recover(TimePoint now);

  [[nodiscard]] std::size_t live_tokens() const;
  [[nodiscard]] const BrokerConfig& config() const { return config_; }

 private:
  SessionRecord teardown(SessionId session, TimePoint now, const std::string& reason);
  std::shared_ptr<std::mutex> session_mutex(SessionId session);
  void publish_state(const SessionRecord& record, GroupId group);

  Store& store_;
  vm::VmPool& pool_;
  collab::RoomManager& rooms_;
  relay::Relay& relay_;
  collab::EventBus* bus_;
  BrokerConfig config_;

  mutable std::mutex mutex_;
  std::set<BookingId> starting_;
  std::map<SessionId, std::shared_ptr<std::mutex>> session_mutexes_;
  std::map<std::string, ParticipantToken> tokens_;
  std::vector<SessionId> stale_rooms_;
};

}  // namespace rlab::session
