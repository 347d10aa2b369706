#include "doctest.h"

#include <thread>

#include "../support/expect.hpp"
#include "../support/lab.hpp"

using namespace rlab;
using namespace std::chrono_literals;
using rlab::testing::error_of;
using rlab::testing::LabWorld;

namespace {

std::size_t session_events(LabWorld& w) {
  std::size_t n = 0;
  for (const auto& e : w.store->log().events()) n += e.kind == event_kind::kSessionStarted;
  return n;
}

}  // namespace

TEST_CASE("start_session") {
  LabWorld w;
  SUBCASE("happy path at slot start") {
    w.clock.set(w.slot_start());
    const auto s = w.broker.start_session(w.students[0], w.booking, w.clock.now());
    CHECK(s.state == SessionState::Active);
    CHECK(w.pool.find(s.vm_id)->state == vm::VmState::Assigned);
    CHECK(w.pool.find(s.vm_id)->session == s.id);
    CHECK(w.rooms.room_of(s.id) == s.conference_room);
    CHECK(w.relay.has_upstream(s.id));
    CHECK(w.store->read([&](const LabState& st) { return st.require_session(s.id).state; }) == SessionState::Active);
  }
  SUBCASE("time window") {
    w.clock.set(w.slot_start() - Minutes{6});
    CHECK(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.clock.now()); }) == Errc::TooEarly);
    w.clock.set(w.slot_start() - Minutes{5});
    CHECK_FALSE(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.clock.now()); }));
  }
  SUBCASE("too late at slot end") {
    CHECK(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_end()); }) == Errc::TooLate);
    CHECK_FALSE(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_end() - 1s); }));
  }
  SUBCASE("second start") {
    w.broker.start_session(w.students[0], w.booking, w.slot_start());
    CHECK(error_of([&] { w.broker.start_session(w.students[1], w.booking, w.slot_start()); }) == Errc::AlreadyStarted);
    CHECK(session_events(w) == 1);
  }
  SUBCASE("concurrent starts for one booking") {
    std::atomic<int> ok{0};
    std::atomic<int> already{0};
    std::vector<std::thread> ts;
    for (int i = 0; i < 8; ++i) {
      ts.emplace_back([&] {
        const auto e = error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_start()); });
        if (!e) ++ok;
        else if (*e == Errc::AlreadyStarted || *e == Errc::PoolExhausted) ++already;
      });
    }
    for (auto& t : ts) t.join();
    CHECK(ok == 1);
    CHECK(already == 7);
    CHECK(session_events(w) == 1);
    CHECK(w.conference.live_rooms().size() == 1);
  }
  SUBCASE("permissions") {
    CHECK(error_of([&] { w.broker.start_session(w.students[3], w.booking, w.slot_start()); }) == Errc::PermissionDenied);
    CHECK(error_of([&] { w.broker.start_session(w.students[0], BookingId{99}, w.slot_start()); }) == Errc::NotFound);
    CHECK_FALSE(error_of([&] { w.broker.start_session(w.teacher, w.booking, w.slot_start()); }));
  }
  SUBCASE("cancelled booking") {
    w.scheduler.cancel_booking(w.students[0], w.booking, w.clock.now());
    CHECK(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_start()); }) == Errc::InvalidState);
  }
}

TEST_CASE("start_session rollback") {
  SUBCASE("pool exhausted leaks no room") {
    LabWorld w;
    const auto b2 = w.scheduler.book_slot(w.students[3], w.g2, w.slots[1].id, w.clock.now()).id;
    w.clock.set(w.slot_start());
    w.broker.start_session(w.students[0], w.booking, w.clock.now());
    // Slot 2 starts at 09:00; 08:55 is within the early grace.
    CHECK(error_of([&] { w.broker.start_session(w.students[3], b2, w.slots[1].start - Minutes{5}); }) ==
          Errc::PoolExhausted);
    CHECK(w.conference.created() == 1);
    CHECK(w.conference.live_rooms().size() == 1);
    CHECK(session_events(w) == 1);
  }
  SUBCASE("room failure releases the VM") {
    LabWorld w(1, {}, sim::FaultPlan{}.fail_on("create_room", 1));
    CHECK(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_start()); }) == Errc::AdapterFailure);
    CHECK(w.pool.pool_status(w.setup).available == 1);
    CHECK(w.pool.pool_status(w.setup).assigned == 0);
    CHECK(session_events(w) == 0);
    CHECK_FALSE(w.broker.start_session(w.students[0], w.booking, w.slot_start()).conference_room.empty());
  }
  SUBCASE("provisioning failure") {
    LabWorld w(1, sim::FaultPlan{}.fail_on("provision", 1));
    CHECK(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_start()); }) == Errc::DriverFailure);
    CHECK(w.conference.created() == 0);
    CHECK(session_events(w) == 0);
  }
  SUBCASE("unreachable desktop") {
    LabWorld w(1, {}, {}, rlab::testing::bench_channels(), [](VmId) { return std::string("unreachable"); });
    CHECK(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_start()); }) == Errc::ConnectFailed);
    CHECK(w.conference.live_rooms().empty());
    CHECK(w.conference.created() == 1);
    CHECK(w.pool.pool_status(w.setup).available == 1);
    CHECK(w.relay.census().sessions == 0);
    CHECK(session_events(w) == 0);
  }
}

TEST_CASE("join_session") {
  LabWorld w;
  w.clock.set(w.slot_start());
  const auto s = w.broker.start_session(w.students[0], w.booking, w.clock.now());

  const auto t = w.broker.join_session(w.students[1], s.id, w.clock.now());
  CHECK(t.token.size() == 64);
  CHECK(t.expires_at == w.slot_end() + Minutes{5});
  CHECK(w.broker.validate_token(t.token, w.clock.now())->user == w.students[1]);
  CHECK_FALSE(w.broker.validate_token(t.token, t.expires_at));

  const auto again = w.broker.join_session(w.students[1], s.id, w.clock.now());
  CHECK(again.token != t.token);
  std::size_t joins = 0;
  for (const auto& e : w.store->log().events()) joins += e.kind == event_kind::kParticipantJoined;
  CHECK(joins == 1);

  CHECK_FALSE(error_of([&] { w.broker.join_session(w.teacher, s.id, w.clock.now()); }));
  CHECK_FALSE(error_of([&] { w.broker.join_session(w.admin, s.id, w.clock.now()); }));
  CHECK(error_of([&] { w.broker.join_session(w.students[3], s.id, w.clock.now()); }) == Errc::NotParticipantEligible);
  CHECK(error_of([&] { w.broker.join_session(w.students[5], s.id, w.clock.now()); }) == Errc::NotParticipantEligible);
  CHECK(error_of([&] { w.broker.join_session(w.students[0], SessionId{77}, w.clock.now()); }) == Errc::NotFound);

  const auto participants = w.store->read([&](const LabState& st) { return st.require_session(s.id).participants; });
  CHECK(participants == std::set<UserId>{w.students[1], w.teacher, w.admin});

  w.broker.end_session(w.students[0], s.id, w.clock.now());
  CHECK(error_of([&] { w.broker.join_session(w.students[1], s.id, w.clock.now()); }) == Errc::SessionNotActive);
}

TEST_CASE("end_session tears everything down") {
  LabWorld w;
  w.clock.set(w.slot_start());
  const auto s = w.broker.start_session(w.students[0], w.booking, w.clock.now());
  std::vector<std::string> tokens;
  for (int i = 0; i < 3; ++i) tokens.push_back(w.broker.join_session(w.students[i], s.id, w.clock.now()).token);
  auto client = w.relay.attach_client(s.id, tokens[0]);
  w.hypervisor.write_disk(s.vm_id, 0, std::vector<std::uint8_t>{'x', 'y'});
  CHECK(w.hypervisor.disk_digest(s.vm_id) != w.base_digest);

  CHECK(error_of([&] { w.broker.end_session(w.students[3], s.id, w.clock.now()); }) == Errc::PermissionDenied);
  const auto ended = w.broker.end_session(w.students[2], s.id, w.clock.now() + 10min);
  CHECK(ended.state == SessionState::Ended);
  CHECK(ended.ended_at == w.clock.now() + 10min);
  CHECK(ended.end_reason == "ended");

  CHECK(w.hypervisor.disk_digest(s.vm_id) == w.base_digest);
  CHECK(w.pool.find(s.vm_id)->state == vm::VmState::Available);
  CHECK(w.conference.created() == w.conference.destroyed());
  CHECK(w.rooms.live_rooms() == 0);
  for (const auto& t : tokens) {
    CHECK_FALSE(w.broker.validate_token(t, w.clock.now()));
    CHECK(error_of([&] { w.relay.attach_client(s.id, t); }) == Errc::TokenInvalid);
    CHECK(error_of([&] { w.broker.session_descriptor(s.id, t, w.clock.now()); }) == Errc::TokenInvalid);
  }
  CHECK(w.broker.live_tokens() == 0);
  CHECK(client->closed());
  CHECK(w.relay.census().sessions == 0);

  // Ending again reports the same terminal result and changes nothing.
  const auto events_before = w.store->log().last_seq();
  const auto again = w.broker.end_session(w.students[0], s.id, w.clock.now() + 20min);
  CHECK(again.ended_at == ended.ended_at);
  CHECK(w.store->log().last_seq() == events_before);
  CHECK(error_of([&] { w.broker.end_session(w.students[0], SessionId{99}, w.clock.now()); }) == Errc::NotFound);

  // The booking can not be restarted into a second session after its slot.
  CHECK(error_of([&] { w.broker.start_session(w.students[0], w.booking, w.slot_end()); }) == Errc::TooLate);
}

TEST_CASE("failed reset at end is retried by the sweep") {
  LabWorld w(1, sim::FaultPlan{}.fail_on("restore_to_base", 1));
  const auto s = w.broker.start_session(w.students[0], w.booking, w.slot_start());
  w.hypervisor.write_disk(s.vm_id, 0, std::vector<std::uint8_t>{1});
  w.broker.end_session(w.students[0], s.id, w.slot_start() + 5min);
  CHECK(w.pool.find(s.vm_id)->state == vm::VmState::Failed);
  const auto sweep = w.broker.sweep(w.slot_start() + 6min);
  CHECK(sweep.ended.empty());
  REQUIRE(sweep.vms.size() == 1);
  CHECK(sweep.vms[0].reset);
  CHECK(w.hypervisor.disk_digest(s.vm_id) == w.base_digest);
}

TEST_CASE("sweep ends sessions at slot end plus grace") {
  LabWorld w;
  w.clock.set(w.slot_start());
  const auto s = w.broker.start_session(w.students[0], w.booking, w.clock.now());
  const auto token = w.broker.join_session(w.students[0], s.id, w.clock.now()).token;
  w.hypervisor.write_disk(s.vm_id, 3, std::vector<std::uint8_t>{7, 7});

  w.clock.set(w.slot_end() + Minutes{4});
  CHECK(w.broker.sweep(w.clock.now()).ended.empty());
  CHECK(w.broker.validate_token(token, w.clock.now()));

  w.clock.set(w.slot_end() + Minutes{5});
  const auto out = w.broker.sweep(w.clock.now());
  CHECK(out.ended == std::vector<SessionId>{s.id});
  const auto rec = w.store->read([&](const LabState& st) { return st.require_session(s.id); });
  CHECK(rec.state == SessionState::Ended);
  CHECK(rec.end_reason == "expired");
  CHECK(w.hypervisor.disk_digest(s.vm_id) == w.base_digest);
  CHECK(w.conference.live_rooms().empty());
  CHECK_FALSE(w.broker.validate_token(token, w.clock.now()));
  CHECK(w.broker.sweep(w.clock.now()).ended.empty());
}

TEST_CASE("end and sweep race: one teardown") {
  for (int round = 0; round < 20; ++round) {
    LabWorld w;
    const auto s = w.broker.start_session(w.students[0], w.booking, w.slot_start());
    std::thread a([&] { w.broker.end_session(w.students[0], s.id, w.slot_end() + 5min); });
    std::thread b([&] { w.broker.sweep(w.slot_end() + 5min); });
    a.join();
    b.join();
    std::size_t ends = 0;
    for (const auto& e : w.store->log().events()) ends += e.kind == event_kind::kSessionEnded;
    CHECK(ends == 1);
    CHECK(w.conference.created() == w.conference.destroyed());
    CHECK(w.pool.find(s.vm_id)->state == vm::VmState::Available);
  }
}

TEST_CASE("session_descriptor") {
  LabWorld w;
  w.clock.set(w.slot_start());
  const auto s = w.broker.start_session(w.students[0], w.booking, w.clock.now());
  const auto t = w.broker.join_session(w.students[0], s.id, w.clock.now());
  const auto d = w.broker.session_descriptor(s.id, t.token, w.clock.now());
  CHECK(d.relay_url.find("/ws/relay/" + s.id.str()) == 0);
  CHECK(d.camera_url.find("/stream/camera/" + s.id.str()) == 0);
  CHECK(d.conference_room == s.conference_room);
  CHECK(d.conference_url.find(s.conference_room) != std::string::npos);
  CHECK(d.chat_group == w.g1);
  CHECK(d.channels.size() == 4);
  CHECK(error_of([&] { w.broker.session_descriptor(s.id, t.token, t.expires_at); }) == Errc::TokenInvalid);
  CHECK(error_of([&] { w.broker.session_descriptor(SessionId{s.id.value + 1}, t.token, w.clock.now()); }) ==
        Errc::TokenInvalid);
  const Json j = d;
  for (const auto* key : {"relay_url", "conference_room", "camera_url", "channels", "chat_group_id"}) {
    CHECK(j.contains(key));
  }
}

TEST_CASE("setup without hardware channels has an empty channel list") {
  LabWorld w(1, {}, {}, {});
  const auto s = w.broker.start_session(w.students[0], w.booking, w.slot_start());
  const auto t = w.broker.join_session(w.students[0], s.id, w.slot_start());
  const auto d = w.broker.session_descriptor(s.id, t.token, w.slot_start());
  CHECK(d.channels.empty());
  CHECK_FALSE(d.relay_url.empty());
}

TEST_CASE("recover ends sessions orphaned by a restart") {
  LabWorld w;
  const auto s = w.broker.start_session(w.students[0], w.booking, w.slot_start());
  const auto ended = w.broker.recover(w.slot_start() + 1min);
  CHECK(ended == std::vector<SessionId>{s.id});
  CHECK(w.store->read([&](const LabState& st) { return st.require_session(s.id).end_reason; }) == "recovered");
  CHECK(w.broker.recover(w.slot_start() + 2min).empty());
}
