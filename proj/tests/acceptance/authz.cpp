#include <functional>
#include <map>

#include "../support/platform_world.hpp"
#include "criteria.hpp"

namespace rlab::acceptance {

namespace {

using testing::PlatformWorld;

/// Resources of one course: its teacher, group, setup, an unstarted booking,
/// a live session with a participant token, and two enrolled students
/// without a group.
struct Side {
  CourseId course;
  GroupId group;
  SetupId setup;
  std::vector<TimeSlot> slots;
  BookingId idle_booking;
  SessionId session;
  std::string participant_token;  // held by a group member
  std::vector<UserId> ungrouped;
};

/// Two courses with different teachers. Side A is the demo course; side B
/// is built next to it. Tokens belong to teacher A and a student of group A.
struct Fixture {
  PlatformWorld w;
  UserId admin;
  Side a;
  Side b;
  UserId loner;
  SetupId unlinked;
  std::string image;
  std::map<Role, std::string> login;
  std::string b_member;

  Fixture() {
    auto& p = *w.platform;
    admin = w.demo.admin;
    const auto teacher_b = p.directory.create_user(admin, "teacher-b", Role::Teacher, "pw-b").id;
    std::vector<UserId> bs;
    for (int i = 0; i < 4; ++i) bs.push_back(p.directory.create_user(admin, "b" + std::to_string(i), Role::Student, "pw-b").id);
    loner = p.directory.create_user(admin, "loner", Role::Student, "pw-b").id;
    std::vector<UserId> extra_a;
    for (int i = 0; i < 2; ++i) extra_a.push_back(p.directory.create_user(admin, "a-extra" + std::to_string(i), Role::Student, "pw-b").id);

    a.course = w.demo.course;
    a.group = w.demo.groups[0];
    a.setup = w.demo.setups[0];
    a.slots = w.demo.slots;
    for (auto s : extra_a) p.directory.enroll_student(w.demo.teacher, a.course, s);
    a.ungrouped = extra_a;

    b.course = p.directory.create_course(admin, teacher_b, "Other Lab").id;
    for (auto s : bs) p.directory.enroll_student(teacher_b, b.course, s);
    b.group = p.directory.create_group(teacher_b, b.course, {bs[0], bs[1]}).id;
    b.ungrouped = {bs[2], bs[3]};
    const std::string content = "other image";
    image = p.pool.register_image(admin, "other.img", std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size())).digest;
    b.setup = p.directory.register_lab_setup(admin, "other", image, {{"relay", ChannelKind::Actuator, ChannelDatatype::Bool, "", 0.0, 0.0}}, "cam-other").id;
    p.directory.link_setup(admin, b.course, b.setup);
    b.slots = p.scheduler.generate_slots(teacher_b, b.setup, make_time(2026, 10, 19, 8), make_time(2026, 10, 19, 12), Minutes{60});
    unlinked = p.directory.register_lab_setup(admin, "spare", image, {}, "cam-spare").id;

    const auto a_member = w.group(0).member_ids[0];
    const auto now = w.clock.now();
    auto open = [&](Side& s, UserId member) {
      const auto live = p.scheduler.book_slot(member, s.group, s.slots[0].id, now).id;
      s.idle_booking = p.scheduler.book_slot(member, s.group, s.slots[1].id, now).id;
      return live;
    };
    const auto live_a = open(a, a_member);
    const auto live_b = open(b, bs[0]);
    w.clock.set(a.slots[0].start);
    a.session = p.broker.start_session(a_member, live_a, w.clock.now()).id;
    b.session = p.broker.start_session(bs[0], live_b, w.clock.now()).id;
    a.participant_token = p.broker.join_session(a_member, a.session, w.clock.now()).token;
    b.participant_token = p.broker.join_session(bs[0], b.session, w.clock.now()).token;

    login[Role::Administrator] = w.login("admin", "admin-pw");
    login[Role::Teacher] = w.login("teacher", "pw-teacher");
    login[Role::Student] = w.login_as(a_member);
    b_member = w.login("b0", "pw-b");
  }
};

struct Probe {
  std::string method;
  std::string target;
  Json body;
};

std::string id(auto v) { return v.str(); }

/// A request to `endpoint` aimed at side `s`. Requests are otherwise valid,
/// so an allowed caller would change state.
using Builder = std::function<Probe(const Fixture&, const Side&)>;

std::map<std::string, Builder> builders() {
  std::map<std::string, Builder> m;
  m["POST /api/users"] = [](const Fixture&, const Side&) {
    return Probe{"POST", "/api/users", Json{{"display_name", "probe-user"}, {"role", "Student"}, {"credential", "x"}}};
  };
  m["POST /api/courses"] = [](const Fixture& f, const Side&) {
    return Probe{"POST", "/api/courses", Json{{"title", "Probe Course"}, {"teacher_id", f.w.demo.teacher}}};
  };
  m["POST /api/courses/{id}/students"] = [](const Fixture& f, const Side& s) {
    return Probe{"POST", "/api/courses/" + id(s.course) + "/students", Json{{"student_id", f.loner}}};
  };
  m["POST /api/courses/{id}/setups"] = [](const Fixture& f, const Side& s) {
    return Probe{"POST", "/api/courses/" + id(s.course) + "/setups", Json{{"setup_id", f.unlinked}}};
  };
  m["POST /api/groups"] = [](const Fixture&, const Side& s) {
    return Probe{"POST", "/api/groups", Json{{"course_id", s.course}, {"member_ids", s.ungrouped}}};
  };
  m["POST /api/images"] = [](const Fixture&, const Side&) {
    return Probe{"POST", "/api/images", Json{{"label", "probe.img"}, {"content_base64", "cHJvYmU="}}};
  };
  m["POST /api/setups"] = [](const Fixture& f, const Side&) {
    return Probe{"POST", "/api/setups",
                 Json{{"name", "probe-setup"}, {"base_image", f.image}, {"channels", Json::array()}, {"camera_source", "cam-probe"}}};
  };
  m["POST /api/setups/{id}/slots"] = [](const Fixture&, const Side& s) {
    return Probe{"POST", "/api/setups/" + id(s.setup) + "/slots",
                 Json{{"from", format_iso8601(make_time(2026, 10, 20, 8))}, {"to", format_iso8601(make_time(2026, 10, 20, 10))},
                      {"slot_minutes", 60}}};
  };
  m["POST /api/bookings"] = [](const Fixture&, const Side& s) {
    return Probe{"POST", "/api/bookings", Json{{"group_id", s.group}, {"slot_id", s.slots[2].id}}};
  };
  m["DELETE /api/bookings/{id}"] = [](const Fixture&, const Side& s) {
    return Probe{"DELETE", "/api/bookings/" + id(s.idle_booking), nullptr};
  };
  m["POST /api/sessions"] = [](const Fixture&, const Side& s) {
    return Probe{"POST", "/api/sessions", Json{{"booking_id", s.idle_booking}}};
  };
  m["POST /api/sessions/{id}/join"] = [](const Fixture&, const Side& s) {
    return Probe{"POST", "/api/sessions/" + id(s.session) + "/join", nullptr};
  };
  m["DELETE /api/sessions/{id}"] = [](const Fixture&, const Side& s) {
    return Probe{"DELETE", "/api/sessions/" + id(s.session), nullptr};
  };
  m["POST /api/groups/{id}/chat"] = [](const Fixture&, const Side& s) {
    return Probe{"POST", "/api/groups/" + id(s.group) + "/chat", Json{{"body", "probe"}}};
  };
  m["POST /api/channels/{name}/write"] = [](const Fixture&, const Side& s) {
    return Probe{"POST", "/api/channels/relay/write",
                 Json{{"setup_id", s.setup}, {"value", true}, {"token", s.participant_token}}};
  };
  m["POST /api/admin/snapshot"] = [](const Fixture&, const Side&) { return Probe{"POST", "/api/admin/snapshot", nullptr}; };
  m["POST /api/admin/sweep"] = [](const Fixture&, const Side&) { return Probe{"POST", "/api/admin/sweep", nullptr}; };
  return m;
}

Scope scope_of(const PermissionRule& rule, Role role) {
  switch (role) {
    case Role::Administrator: return rule.administrator;
    case Role::Teacher: return rule.teacher;
    case Role::Student: return rule.student;
  }
  return Scope::Deny;
}

}  // namespace

Outcome authorization_sweep() {
  Checks checks;
  Fixture f;
  const auto table = builders();
  std::size_t deny_cases = 0;
  std::size_t allowed_cells = 0;
  std::size_t endpoints = 0;

  for (const auto& e : gateway::Api::endpoints()) {
    if (!e.mutating) continue;
    ++endpoints;
    const auto key = std::string(e.method) + " " + std::string(e.pattern);
    const auto it = table.find(key);
    if (!checks.check(it != table.end() && e.action.has_value(), "no probe for " + key)) continue;
    const auto& rule = rule_for(*e.action);
    std::size_t cases_here = 0;
    for (auto role : {Role::Administrator, Role::Teacher, Role::Student}) {
      const auto scope = scope_of(rule, role);
      if (scope == Scope::Any) {
        ++allowed_cells;
        continue;
      }
      // Deny: even the caller's own course is refused. Owner: the other course.
      const Side& side = scope == Scope::Deny ? f.a : f.b;
      const auto probe = it->second(f, side);
      const auto events_before = f.w.event_count();
      const auto state_before = f.w.platform->store->copy_state().canonical();
      const auto r = f.w.call(probe.method, probe.target, f.login.at(role), probe.body);
      ++deny_cases;
      ++cases_here;
      const auto label = std::string(to_string(role)) + " " + key;
      checks.check(r.status == 403 && r.body.value("error", "") == "PermissionDenied",
                   label + " gave " + std::to_string(r.status) + " " + r.body.dump());
      checks.check(f.w.event_count() == events_before, label + " committed events");
      checks.check(f.w.platform->store->copy_state().canonical() == state_before, label + " changed state");
    }
    checks.check(cases_here > 0, key + " has no deny case");
  }
  // Control: the same requests from a caller who may make them are not
  // refused, so the denials above come from role and ownership alone.
  std::size_t controls = 0;
  for (const auto& e : gateway::Api::endpoints()) {
    if (!e.mutating) continue;
    const auto key = std::string(e.method) + " " + std::string(e.pattern);
    const auto it = table.find(key);
    if (it == table.end()) continue;
    Fixture fresh;
    const auto probe = it->second(fresh, fresh.b);
    // A participant token works only for its holder.
    const auto& caller = e.action == Action::WriteActuator ? fresh.b_member : fresh.login.at(Role::Administrator);
    const auto r = fresh.w.call(probe.method, probe.target, caller, probe.body);
    ++controls;
    checks.check(r.status < 300 || r.status == 409, "control " + key + " gave " + std::to_string(r.status) + " " + r.body.dump());
  }

  checks.note(std::to_string(controls) + " allowed controls, " + std::to_string(deny_cases) + " deny cases over " + std::to_string(endpoints) +
              " mutating endpoints, " + std::to_string(allowed_cells) + " allowed cells skipped");
  return checks.outcome();
}

}  // namespace rlab::acceptance
