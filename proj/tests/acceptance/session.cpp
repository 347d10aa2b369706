#include <filesystem>
#include <random>

#include "../support/platform_world.hpp"
#include "criteria.hpp"

namespace rlab::acceptance {

namespace {

using testing::PlatformWorld;

struct Started {
  SessionId id;
  VmId vm;
  std::vector<std::string> tokens;
};

/// Books `slot` for group `g`, moves the clock to its start, starts the
/// session and lets every member and the teacher join.
Started start_for(PlatformWorld& w, std::size_t g, const TimeSlot& slot) {
  const auto group = w.group(g);
  const auto lead = w.login_as(group.member_ids[0]);
  const auto b = w.call("POST", "/api/bookings", lead, Json{{"group_id", group.id}, {"slot_id", slot.id}});
  if (b.status != 201) throw std::runtime_error("booking failed: " + b.body.dump());
  w.clock.set(slot.start);
  const auto s = w.call("POST", "/api/sessions", lead, Json{{"booking_id", b.body.at("id")}});
  if (s.status != 201) throw std::runtime_error("session start failed: " + s.body.dump());
  Started out{SessionId{s.body.at("id").get<std::uint64_t>()}, VmId{s.body.at("vm_id").get<std::uint64_t>()}, {}};
  std::vector<std::string> logins;
  for (auto m : group.member_ids) logins.push_back(w.login_as(m));
  logins.push_back(w.login("teacher", "pw-teacher"));
  for (const auto& l : logins) {
    const auto j = w.call("POST", "/api/sessions/" + out.id.str() + "/join", l);
    if (j.status != 200) throw std::runtime_error("join failed: " + j.body.dump());
    out.tokens.push_back(j.body.at("token").get<std::string>());
  }
  return out;
}

std::string base_of(PlatformWorld& w) {
  return w.platform->store->read(
      [&](const LabState& s) { return s.require_setup(w.demo.setups.at(0)).base_image; });
}

void scribble(PlatformWorld& w, VmId vm, const std::string& text) {
  w.platform->hypervisor.write_disk(vm, 3, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Checks that nothing of the session is left: clean disk, balanced rooms,
/// dead tokens on every surface that accepts them.
void check_torn_down(Checks& checks, PlatformWorld& w, const Started& s, const std::string& base,
                     const std::string& label) {
  auto& p = *w.platform;
  const auto now = w.clock.now();
  checks.check(p.hypervisor.disk_digest(s.vm) == base, label + ": VM digest differs from the base image");
  checks.check(p.conference.created() == p.conference.destroyed(),
               label + ": conference rooms created " + std::to_string(p.conference.created()) + ", destroyed " +
                   std::to_string(p.conference.destroyed()));
  checks.check(p.rooms.live_rooms() == 0, label + ": room still live");
  checks.check(!p.relay.has_upstream(s.id), label + ": relay upstream still open");
  const auto state = p.store->read([&](const LabState& st) { return st.require_session(s.id).state; });
  checks.check(state == SessionState::Ended, label + ": session not Ended");
  const auto viewer = w.login("teacher", "pw-teacher");
  for (const auto& t : s.tokens) {
    checks.check(!p.broker.validate_token(t, now), label + ": participant token still valid");
    const auto d = w.call("GET", "/api/sessions/" + s.id.str() + "/descriptor?token=" + t, viewer);
    checks.check(d.status == 401, label + ": descriptor with an old token gave " + std::to_string(d.status));
    bool refused = false;
    try {
      (void)p.relay.attach_client(s.id, t);
    } catch (const Error&) {
      refused = true;
    }
    checks.check(refused, label + ": relay accepted an old token");
  }
}

}  // namespace

Outcome session_lifecycle() {
  Checks checks;
  PlatformWorld w;
  const auto base = base_of(w);

  // Ended explicitly.
  auto s1 = start_for(w, 0, w.demo.slots[0]);
  checks.check(w.platform->hypervisor.disk_digest(s1.vm) == base, "fresh VM does not match its base image");
  checks.check(w.platform->conference.created() == 1, "no conference room for the session");
  scribble(w, s1.vm, "student work in progress");
  checks.check(w.platform->hypervisor.disk_digest(s1.vm) != base, "disk write did not change the digest");
  w.clock.advance(std::chrono::minutes{30});
  const auto lead = w.login_as(w.group(0).member_ids[0]);
  const auto end = w.call("DELETE", "/api/sessions/" + s1.id.str(), lead);
  checks.check(end.status == 200, "end_session returned " + std::to_string(end.status));
  check_torn_down(checks, w, s1, base, "ended");

  // Left running: the sweep reclaims it at slot end + 5 min, not before.
  const auto& slot = w.demo.slots[1];
  auto s2 = start_for(w, 1, slot);
  scribble(w, s2.vm, "never cleaned up");
  w.clock.set(slot.end() + std::chrono::minutes{5} - std::chrono::seconds{1});
  const auto early = w.platform->sweep();
  checks.check(early.ended.empty(), "sweep ended the session before slot end + 5 min");
  checks.check(w.platform->hypervisor.disk_digest(s2.vm) != base, "VM reset before the grace ran out");
  w.clock.set(slot.end() + std::chrono::minutes{5});
  const auto due = w.platform->sweep();
  checks.check(due.ended.size() == 1 && due.ended[0] == s2.id, "sweep at slot end + 5 min did not end the session");
  const auto reason = w.platform->store->read([&](const LabState& s) { return s.require_session(s2.id).end_reason; });
  check_torn_down(checks, w, s2, base, "swept");

  checks.note("2 sessions torn down, rooms " + std::to_string(w.platform->conference.created()) + "/" +
              std::to_string(w.platform->conference.destroyed()) + ", sweep reason '" + reason + "'");
  return checks.outcome();
}

Outcome cross_session_chat() {
  Checks checks;
  const auto dir = std::filesystem::temp_directory_path() / ("rlab-accept-chat-" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  auto config = testing::small_config();
  config.data_dir = dir.string();
  config.fsync = true;

  std::vector<ChatMessage> before_restart;
  {
    PlatformWorld w(config);
    const auto g = w.group(0);
    const auto path = "/api/groups/" + g.id.str() + "/chat";
    std::vector<std::string> members;
    for (auto m : g.member_ids) members.push_back(w.login_as(m));
    auto history = [&](const std::string& who) {
      const auto r = w.call("GET", path + "?limit=1000", who);
      return r.status == 200 ? r.body.get<std::vector<ChatMessage>>() : std::vector<ChatMessage>{};
    };
    auto bodies = [](const std::vector<ChatMessage>& h) {
      std::vector<std::string> out;
      for (const auto& m : h) out.push_back(m.body);
      return out;
    };

    auto s1 = start_for(w, 0, w.demo.slots[0]);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto r = w.call("POST", path, members[i % members.size()], Json{{"body", "during one #" + std::to_string(i)}});
      checks.check(r.status == 201, "post during session 1 failed");
    }
    w.clock.advance(std::chrono::minutes{50});
    checks.check(w.call("DELETE", "/api/sessions/" + s1.id.str(), members[0]).status == 200, "ending session 1 failed");

    const std::vector<std::string> first{"during one #0", "during one #1", "during one #2"};
    checks.check(bodies(history(members[1])) == first, "history after session 1 ended is incomplete");

    auto s2 = start_for(w, 0, w.demo.slots[1]);
    checks.check(bodies(history(members[2 % members.size()])) == first, "history during session 2 is incomplete");
    checks.check(bodies(history(w.login("teacher", "pw-teacher"))) == first, "teacher cannot read the history");
    checks.check(w.call("POST", path, members[1], Json{{"body", "during two"}}).status == 201, "post during session 2 failed");
    before_restart = history(members[0]);
    checks.check(before_restart.size() == 4, "expected 4 messages before restart");
    (void)s2;
    // Process dies with session 2 still live.
  }
  {
    ManualClock clock(make_time(2026, 10, 19, 9, 30));
    Platform p(config, clock);
    gateway::Api api(p);
    checks.check(p.recovered().size() == 1, "restart did not recover the live session");
    const auto group = before_restart.empty() ? GroupId{} : before_restart[0].group_id;
    const auto member = before_restart.empty() ? UserId{} : before_restart[0].author;
    const auto replayed = p.chat.chat_history(member, group, 0, 1000);
    checks.check(replayed == before_restart, "chat history after restart differs");
    const auto next = p.chat.post_message(member, group, "after restart");
    checks.check(next.seq == before_restart.size() + 1, "chat seq does not continue after restart");
    checks.check(p.store->recovery().diagnostic.empty() && !p.store->recovery().corrupted, "log reported damage");
    checks.note(std::to_string(before_restart.size()) + " messages across 2 sessions and a restart");
  }
  std::filesystem::remove_all(dir);
  return checks.outcome();
}

}  // namespace rlab::acceptance
