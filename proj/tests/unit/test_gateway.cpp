#include "doctest.h"

#include <random>
#include <set>

#include "../support/expect.hpp"
#include "../support/platform_world.hpp"
#include "../support/world.hpp"
#include "rlab/common/crypto.hpp"
#include "rlab/gateway/auth.hpp"
#include "rlab/gateway/routes.hpp"

using namespace rlab;
using namespace rlab::gateway;
using namespace std::chrono_literals;
using rlab::testing::error_of;
using rlab::testing::PlatformWorld;
using rlab::testing::World;

TEST_CASE("authenticate") {
  World w;
  AuthService auth(*w.store);
  const auto now = w.clock.now();

  SUBCASE("correct credentials give a token with the user's role") {
    const auto t = auth.authenticate("alice", "pw", std::nullopt, now);
    CHECK(t.user == w.teacher);
    CHECK(t.role == Role::Teacher);
    CHECK(t.expires_at - t.issued_at == 12h);
    CHECK(t.token.size() == 64);
    CHECK(auth.resolve(t.token, now).user == w.teacher);
  }
  SUBCASE("unknown user and wrong password are indistinguishable") {
    std::string wrong_msg, unknown_msg;
    try {
      auth.authenticate("alice", "nope", std::nullopt, now);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidCredentials);
      wrong_msg = e.what();
    }
    try {
      auth.authenticate("nobody", "pw", std::nullopt, now);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidCredentials);
      unknown_msg = e.what();
    }
    CHECK_FALSE(wrong_msg.empty());
    CHECK(wrong_msg == unknown_msg);
  }
  SUBCASE("role narrows the lookup") {
    CHECK(error_of([&] { auth.authenticate("alice", "pw", Role::Student, now); }) == Errc::InvalidCredentials);
    CHECK(auth.authenticate("alice", "pw", Role::Teacher, now).user == w.teacher);
  }
  SUBCASE("same name in two roles with the same credential is ambiguous without a role") {
    const auto student = w.directory.create_user(w.admin, "alice", Role::Student, "pw").id;
    CHECK(error_of([&] { auth.authenticate("alice", "pw", std::nullopt, now); }) == Errc::InvalidCredentials);
    CHECK(auth.authenticate("alice", "pw", Role::Student, now).user == student);
  }
  SUBCASE("same name in two roles with different credentials resolves by credential") {
    const auto student = w.directory.create_user(w.admin, "alice", Role::Student, "other").id;
    CHECK(auth.authenticate("alice", "other", std::nullopt, now).user == student);
    CHECK(auth.authenticate("alice", "pw", std::nullopt, now).user == w.teacher);
  }
  SUBCASE("expiry, revocation and purge") {
    const auto t = auth.authenticate("alice", "pw", std::nullopt, now);
    CHECK_FALSE(error_of([&] { auth.resolve(t.token, t.expires_at - 1s); }));
    CHECK(error_of([&] { auth.resolve(t.token, t.expires_at); }) == Errc::TokenExpired);
    CHECK(error_of([&] { auth.resolve("forged", now); }) == Errc::TokenInvalid);
    const auto t2 = auth.authenticate("root", "rootpw", std::nullopt, now + 1h);
    CHECK(auth.purge(t.expires_at) == 1);
    CHECK(error_of([&] { auth.resolve(t.token, now); }) == Errc::TokenInvalid);
    CHECK(auth.resolve(t2.token, now).user == w.admin);
    auth.revoke(t2.token);
    CHECK(error_of([&] { auth.resolve(t2.token, now); }) == Errc::TokenInvalid);
  }
  SUBCASE("tokens are distinct") {
    std::set<std::string> seen;
    for (int i = 0; i < 50; ++i) seen.insert(auth.authenticate("alice", "pw", std::nullopt, now).token);
    CHECK(seen.size() == 50);
  }
  SUBCASE("login commits nothing") {
    const auto before = w.store->log().last_seq();
    auth.authenticate("alice", "pw", std::nullopt, now);
    CHECK(w.store->log().last_seq() == before);
  }
}

TEST_CASE("route table") {
  const auto table = RouteTable::standard();
  auto component = [&](std::string_view path) -> std::optional<Component> {
    const auto m = table.route(path);
    if (!m) return std::nullopt;
    return m->route->component;
  };

  SUBCASE("examples") {
    CHECK(component("/api/bookings/17") == Component::BookingScheduler);
    CHECK(table.route("/api/bookings/17")->rest == "/17");
    CHECK(component("/ws/relay/3") == Component::RdRelay);
    CHECK_FALSE(component("/nonexistent"));
    CHECK_FALSE(component("/"));
    CHECK_FALSE(component("/apix/bookings"));
  }
  SUBCASE("longest prefix and wildcards") {
    CHECK(component("/api/groups") == Component::Directory);
    CHECK(component("/api/groups/4") == Component::Directory);
    CHECK(component("/api/groups/4/quota") == Component::BookingScheduler);
    CHECK(component("/api/groups/4/chat") == Component::CollabServices);
    CHECK(component("/api/setups/2/slots") == Component::BookingScheduler);
    CHECK(component("/api/setups/2/pool") == Component::VmPool);
    CHECK(component("/api/setups/2/other") == Component::Directory);
    CHECK(component("/api/admin/sweep") == Component::SessionBroker);
    CHECK_FALSE(component("/api/admin"));
  }
  SUBCASE("prefixes match whole segments only") {
    CHECK_FALSE(component("/api/bookingsx"));
    CHECK(component("/api/bookings/") == Component::BookingScheduler);
  }
  SUBCASE("literal beats wildcard at equal length") {
    RouteTable t({{"/a/*", Component::Auth, {}}, {"/a/b", Component::VmPool, {}}});
    CHECK(t.route("/a/b")->route->component == Component::VmPool);
    CHECK(t.route("/a/c")->route->component == Component::Auth);
  }
  SUBCASE("every route names a known component") {
    for (const auto& r : table.routes()) CHECK_FALSE(to_string(r.component).empty());
  }
  SUBCASE("deterministic over random paths") {
    const std::vector<std::string> words = {"api", "ws", "stream", "groups", "setups", "relay", "1", "chat",
                                            "quota", "pool", "admin", "sweep", "x", "bookings", ""};
    std::mt19937 rng(5);
    for (int i = 0; i < 2000; ++i) {
      std::string path;
      const int n = static_cast<int>(rng() % 5);
      for (int k = 0; k < n; ++k) path += "/" + words[rng() % words.size()];
      const RouteTable fresh = RouteTable::standard();
      const auto a = table.route(path);
      const auto b = fresh.route(path);
      REQUIRE(a.has_value() == b.has_value());
      if (a) {
        CHECK(a->route->prefix == b->route->prefix);
        CHECK(a->rest == b->rest);
      }
    }
  }
}

TEST_CASE("config parsing") {
  SUBCASE("defaults") {
    const auto c = PlatformConfig::from_json(Json::object());
    CHECK(c.port == 8080);
    CHECK(c.quota.max_slots_per_group_per_week == 2u);
    CHECK(c.token_lifetime == 12h);
    CHECK(c.broker.end_grace == Minutes{5});
    CHECK(c.relay.client_queue_frames == 8);
    CHECK_FALSE(c.bootstrap_admin);
  }
  SUBCASE("overrides") {
    const auto c = PlatformConfig::from_json(Json::parse(R"({
      "port": 9000, "data_dir": "/tmp/x",
      "quota": {"max_slots_per_group_per_week": 3, "scope": "per_setup"},
      "pools": {"default_capacity": 2, "capacity": {"4": 5}, "sweep_grace_minutes": 7},
      "grace": {"early_start_minutes": 10, "token_minutes": 1, "end_minutes": 2},
      "auth": {"token_hours": 2, "bootstrap_admin": {"display_name": "a", "credential": "b"}},
      "drivers": {"desktop": {"encoding": "rle", "fps": 5}, "faults": {"hypervisor": {"restore_to_base": {"fail_on": [1]}}}}
    })"));
    CHECK(c.port == 9000);
    CHECK(c.data_dir == "/tmp/x");
    CHECK(c.quota.max_slots_per_group_per_week == 3u);
    CHECK(c.quota.scope == booking::QuotaScope::PerSetup);
    CHECK(c.pools.capacity_for(SetupId{4}) == 5);
    CHECK(c.pools.capacity_for(SetupId{1}) == 2);
    CHECK(c.pools.sweep_grace == Minutes{7});
    CHECK(c.broker.early_grace == Minutes{10});
    CHECK(c.token_lifetime == 2h);
    CHECK(c.bootstrap_admin->display_name == "a");
    CHECK(c.drivers.desktop.encoding == relay::FrameEncoding::Rle);
    CHECK(c.drivers.desktop.fps == 5);
    auto plan = c.drivers.hypervisor_faults;
    CHECK(plan.next_call_fails("restore_to_base"));
    CHECK_FALSE(plan.next_call_fails("restore_to_base"));
  }
  SUBCASE("unlimited quota") {
    CHECK_FALSE(PlatformConfig::from_json(Json::parse(R"({"quota": null})")).quota.max_slots_per_group_per_week);
  }
  SUBCASE("rejects bad values") {
    for (const char* bad : {R"({"port": "x"})", R"({"quota": {"scope": "weird"}})", R"({"group_size": {"min": 4, "max": 2}})",
                            R"({"drivers": {"hypervisor": "kvm"}})", R"({"auth": {"token_hours": 0}})",
                            R"({"sweep_interval_seconds": 0})", R"([1])",
                            R"({"drivers": {"faults": {"hypervisor": {"start": 3}}}})"}) {
      CAPTURE(bad);
      CHECK(error_of([&] { PlatformConfig::from_json(Json::parse(bad)); }) == Errc::InvalidArgument);
    }
  }
}

TEST_CASE("target parsing") {
  const auto [path, query] = parse_target("/api/groups/3/chat?after=2&limit=10&x=a%20b+c&flag");
  CHECK(path == "/api/groups/3/chat");
  CHECK(query.at("after") == "2");
  CHECK(query.at("limit") == "10");
  CHECK(query.at("x") == "a b c");
  CHECK(query.at("flag").empty());
  CHECK(error_of([] { percent_decode("%zz"); }) == Errc::InvalidArgument);
  CHECK(error_of([] { percent_decode("abc%2"); }) == Errc::InvalidArgument);
  CHECK(percent_decode("%2Fx") == "/x");
}

TEST_CASE("error status mapping") {
  CHECK(http_status(Errc::InvalidArgument) == 400);
  CHECK(http_status(Errc::TokenExpired) == 401);
  CHECK(http_status(Errc::InvalidCredentials) == 401);
  CHECK(http_status(Errc::PermissionDenied) == 403);
  CHECK(http_status(Errc::NotFound) == 404);
  CHECK(http_status(Errc::SlotTaken) == 409);
  CHECK(http_status(Errc::QuotaExceeded) == 409);
  CHECK(http_status(Errc::BodyTooLarge) == 413);
  CHECK(http_status(Errc::PoolExhausted) == 503);
  CHECK(http_status(Errc::DriverFailure) == 502);
  CHECK(http_status(Errc::StorageFailure) == 500);
  for (int c = 0; c <= static_cast<int>(Errc::ProtocolError); ++c) {
    const int s = http_status(static_cast<Errc>(c));
    CHECK((s >= 400 && s < 600));
  }
}

TEST_CASE("join refusals are reported as PermissionDenied") {
  const auto r = error_response(Error(Errc::NotParticipantEligible, "nope"));
  CHECK(r.status == 403);
  CHECK(r.body["error"] == "PermissionDenied");
  CHECK(r.body["reason"] == "NotParticipantEligible");
  CHECK(error_response(Error(Errc::SlotTaken, "x")).body["error"] == "SlotTaken");
}

TEST_CASE("api: directory and booking flow") {
  PlatformWorld w;
  const auto admin = w.login("admin", "admin-pw");
  const auto teacher = w.login("teacher", "pw-teacher");
  const auto g0 = w.group(0);
  const auto member = w.login_as(g0.member_ids[0]);
  const auto setup = w.demo.setups[0];
  const auto slot = w.demo.slots[0].id;

  SUBCASE("login failure and missing token") {
    auto r = w.call("POST", "/api/auth/login", {}, Json{{"display_name", "teacher"}, {"credential", "bad"}});
    CHECK(r.status == 401);
    CHECK(r.body["error"] == "InvalidCredentials");
    auto r2 = w.call("POST", "/api/auth/login", {}, Json{{"display_name", "ghost"}, {"credential", "bad"}});
    CHECK(r2.body == r.body);
    CHECK(w.call("GET", "/api/me").status == 401);
    CHECK(w.call("GET", "/api/me", "forged").status == 401);
  }
  SUBCASE("expired token is rejected everywhere") {
    w.clock.advance(12h);
    const auto r = w.call("GET", "/api/me", member);
    CHECK(r.status == 401);
    CHECK(r.body["error"] == "TokenExpired");
    CHECK(w.call("POST", "/api/groups/1/chat", member, Json{{"body", "hi"}}).status == 401);
  }
  SUBCASE("logout revokes") {
    CHECK(w.call("POST", "/api/auth/logout", member).status == 200);
    CHECK(w.call("GET", "/api/me", member).status == 401);
  }
  SUBCASE("me lists groups and courses") {
    const auto r = w.call("GET", "/api/me", member);
    CHECK(r.status == 200);
    CHECK(r.body["groups"] == Json::array({g0.id}));
    CHECK(r.body["courses"] == Json::array({w.demo.course}));
    CHECK_FALSE(r.body.contains("credential_hash"));
  }
  SUBCASE("admin creates a user without leaking the hash") {
    const auto r = w.call("POST", "/api/users", admin,
                          Json{{"display_name", "bob"}, {"role", "Teacher"}, {"credential", "x"}});
    CHECK(r.status == 201);
    CHECK(r.body["role"] == "Teacher");
    CHECK_FALSE(r.body.contains("credential_hash"));
    CHECK(w.login("bob", "x").size() == 64);
  }
  SUBCASE("malformed bodies") {
    CHECK(w.call("POST", "/api/users", admin, Json{{"display_name", "bob"}}).status == 400);
    gateway::ApiRequest raw{"POST", "/api/users", {}, {{"authorization", "Bearer " + admin}}, "{not json"};
    CHECK(w.api->handle(raw).status == 400);
    CHECK(w.call("DELETE", "/api/bookings/abc", member).status == 400);
  }
  SUBCASE("unknown route, unknown endpoint and wrong method") {
    CHECK(w.call("GET", "/nonexistent").status == 404);
    CHECK(w.call("GET", "/api/groups/1/nothing", member).status == 404);
    CHECK(w.call("PUT", "/api/bookings", member).status == 405);
  }
  SUBCASE("slots, booking, quota, cancel") {
    auto slots = w.call("GET", "/api/setups/" + setup.str() + "/slots?from=2026-10-19T00:00Z&to=2026-10-20T00:00Z", member);
    REQUIRE(slots.status == 200);
    CHECK(slots.body.size() == 4);
    CHECK(slots.body[0]["available"] == true);

    auto b = w.call("POST", "/api/bookings", member, Json{{"group_id", g0.id}, {"slot_id", slot}});
    REQUIRE(b.status == 201);
    CHECK(b.body["state"] == "Active");
    const auto again = w.call("POST", "/api/bookings", member, Json{{"group_id", g0.id}, {"slot_id", slot}});
    CHECK(again.status == 409);
    CHECK(again.body["error"] == "SlotTaken");

    auto q = w.call("GET", "/api/groups/" + g0.id.str() + "/quota?week=2026-W43", member);
    CHECK(q.status == 200);
    CHECK(q.body["used"] == 1);
    CHECK(q.body["remaining"] == 1);
    CHECK(q.body["limit"] == 2);

    w.call("POST", "/api/bookings", member, Json{{"group_id", g0.id}, {"slot_id", w.demo.slots[1].id}});
    const auto over = w.call("POST", "/api/bookings", member, Json{{"group_id", g0.id}, {"slot_id", w.demo.slots[2].id}});
    CHECK(over.status == 409);
    CHECK(over.body["error"] == "QuotaExceeded");

    auto listed = w.call("GET", "/api/bookings", member);
    CHECK(listed.body.size() == 2);
    CHECK(listed.body[0].contains("slot"));

    const auto c = w.call("DELETE", "/api/bookings/" + b.body["id"].dump(), member);
    CHECK(c.status == 200);
    CHECK(c.body["state"] == "Cancelled");
    slots = w.call("GET", "/api/setups/" + setup.str() + "/slots?from=2026-10-19T00:00Z&to=2026-10-20T00:00Z", member);
    CHECK(slots.body[0]["available"] == true);
  }
  SUBCASE("the other group cannot see or use this group's resources") {
    const auto outsider = w.login_as(w.group(1).member_ids[0]);
    CHECK(w.call("GET", "/api/groups/" + g0.id.str() + "/quota", outsider).status == 403);
    CHECK(w.call("GET", "/api/groups/" + g0.id.str() + "/chat", outsider).status == 403);
    CHECK(w.call("POST", "/api/bookings", outsider, Json{{"group_id", g0.id}, {"slot_id", slot}}).status == 403);
    CHECK(w.call("GET", "/api/groups", outsider).body.size() == 1);
    CHECK(w.call("GET", "/api/groups", teacher).body.size() == 2);
  }
  SUBCASE("teacher-owned operations") {
    const auto r = w.call("POST", "/api/setups/" + setup.str() + "/slots", teacher,
                          Json{{"from", "2026-10-20T08:00Z"}, {"to", "2026-10-20T10:00Z"}, {"slot_minutes", 60}});
    CHECK(r.status == 201);
    CHECK(r.body.size() == 2);
    const auto overlap = w.call("POST", "/api/setups/" + setup.str() + "/slots", teacher,
                                Json{{"from", "2026-10-20T09:00Z"}, {"to", "2026-10-20T11:00Z"}});
    CHECK(overlap.status == 409);
    CHECK(w.call("GET", "/api/setups/" + setup.str() + "/pool", teacher).status == 403);
    const auto pool = w.call("GET", "/api/setups/" + setup.str() + "/pool", admin);
    CHECK(pool.status == 200);
    CHECK(pool.body["capacity"] == 1);
  }
  SUBCASE("images and setups") {
    const auto img = w.call("POST", "/api/images", admin,
                            Json{{"label", "x.img"}, {"content_base64", crypto::base64_encode(std::vector<std::uint8_t>{1, 2, 3})}});
    REQUIRE(img.status == 201);
    CHECK(img.body["size"] == 3);
    const auto s = w.call("POST", "/api/setups", admin,
                          Json{{"name", "basys"}, {"base_image", img.body["digest"]}, {"channels", Json::array()}});
    CHECK(s.status == 201);
    CHECK(w.call("POST", "/api/setups", admin, Json{{"name", "y"}, {"base_image", "00"}}).status == 404);
    CHECK(w.call("GET", "/api/setups", member).body.size() == 1);
    CHECK(w.call("GET", "/api/setups", admin).body.size() == 2);
    CHECK(w.call("POST", "/api/courses/" + w.demo.course.str() + "/setups", teacher, Json{{"setup_id", s.body["id"]}}).status == 200);
    CHECK(w.call("GET", "/api/setups", member).body.size() == 2);
  }
}

TEST_CASE("api: session, chat and hardware flow") {
  PlatformWorld w;
  const auto g0 = w.group(0);
  const auto alice = w.login_as(g0.member_ids[0]);
  const auto bob = w.login_as(g0.member_ids[1]);
  const auto teacher = w.login("teacher", "pw-teacher");
  const auto setup = w.demo.setups[0];
  const auto booking = w.call("POST", "/api/bookings", alice, Json{{"group_id", g0.id}, {"slot_id", w.demo.slots[0].id}});
  REQUIRE(booking.status == 201);

  SUBCASE("too early, then start, join, descriptor, end") {
    const auto early = w.call("POST", "/api/sessions", alice, Json{{"booking_id", booking.body["id"]}});
    CHECK(early.status == 409);
    CHECK(early.body["error"] == "TooEarly");

    w.clock.set(w.demo.slots[0].start);
    const auto s = w.call("POST", "/api/sessions", alice, Json{{"booking_id", booking.body["id"]}});
    REQUIRE(s.status == 201);
    const auto sid = s.body["id"].get<std::uint64_t>();
    const auto path = "/api/sessions/" + std::to_string(sid);

    const auto j = w.call("POST", path + "/join", bob);
    REQUIRE(j.status == 200);
    const auto ptoken = j.body["token"].get<std::string>();
    CHECK(j.body["descriptor"]["setup_id"] == setup);
    CHECK(j.body["descriptor"]["relay_url"].get<std::string>().find("/ws/relay/" + std::to_string(sid)) == 0);

    CHECK(w.call("GET", path + "/descriptor?token=" + ptoken, bob).status == 200);
    CHECK(w.call("GET", path + "/descriptor?token=" + ptoken, alice).status == 403);
    CHECK(w.call("GET", path + "/descriptor", bob).status == 401);

    const auto listed = w.call("GET", "/api/sessions", bob);
    REQUIRE(listed.body.size() == 1);
    CHECK(listed.body[0]["setup_id"] == setup);

    const auto outsider = w.login_as(w.group(1).member_ids[0]);
    const auto denied = w.call("POST", path + "/join", outsider);
    CHECK(denied.status == 403);
    CHECK(w.call("GET", "/api/sessions", outsider).body.empty());

    // Hardware through the participant token.
    const auto channels = w.call("GET", "/api/setups/" + setup.str() + "/channels", bob);
    CHECK(channels.body.size() == 4);
    const auto temp = w.call("GET", "/api/channels/temp?setup_id=" + setup.str() + "&token=" + ptoken, bob);
    REQUIRE(temp.status == 200);
    CHECK(temp.body["value"].get<double>() >= 15.0);
    CHECK(temp.body["value"].get<double>() <= 35.0);
    const auto wr = w.call("POST", "/api/channels/fan/write", bob,
                           Json{{"setup_id", setup}, {"value", 40.0}, {"token", ptoken}});
    CHECK(wr.status == 200);
    CHECK(w.call("GET", "/api/channels/fan?setup_id=" + setup.str() + "&token=" + ptoken, bob).body["value"] == 40.0);
    CHECK(w.call("POST", "/api/channels/fan/write", bob, Json{{"setup_id", setup}, {"value", 140.0}, {"token", ptoken}}).status == 400);
    CHECK(w.call("POST", "/api/channels/nope/write", bob, Json{{"setup_id", setup}, {"value", 1.0}, {"token", ptoken}}).status == 404);
    CHECK(w.call("POST", "/api/channels/fan/write", alice, Json{{"setup_id", setup}, {"value", 1.0}, {"token", ptoken}}).status == 403);
    CHECK(w.call("POST", "/api/channels/fan/write", bob, Json{{"setup_id", setup}, {"value", 1.0}, {"token", "bad"}}).status == 401);

    const auto end = w.call("DELETE", path, teacher);
    CHECK(end.status == 200);
    CHECK(end.body["state"] == "Ended");
    CHECK(w.call("GET", path + "/descriptor?token=" + ptoken, bob).status == 401);
    CHECK(w.call("POST", path + "/join", bob).status == 409);
  }
  SUBCASE("chat") {
    const auto path = "/api/groups/" + g0.id.str() + "/chat";
    for (int i = 0; i < 5; ++i) {
      CHECK(w.call("POST", path, i % 2 ? bob : alice, Json{{"body", "m" + std::to_string(i)}}).status == 201);
    }
    CHECK(w.call("POST", path, teacher, Json{{"body", "from teacher"}}).status == 201);
    const auto all = w.call("GET", path, bob);
    REQUIRE(all.body.size() == 6);
    CHECK(all.body[5]["body"] == "from teacher");
    const auto page = w.call("GET", path + "?after=2&limit=2", bob);
    REQUIRE(page.body.size() == 2);
    CHECK(page.body[0]["seq"] == 3);
    CHECK(w.call("POST", path, bob, Json{{"body", ""}}).status == 400);
    CHECK(w.call("POST", path, bob, Json{{"body", std::string(4097, 'x')}}).status == 413);
    CHECK(w.call("GET", path + "?limit=0", bob).status == 400);
    CHECK(w.call("GET", path + "?after=x", bob).status == 400);
  }
  SUBCASE("admin sweep and snapshot") {
    const auto admin = w.login("admin", "admin-pw");
    w.clock.set(w.demo.slots[0].start);
    const auto s = w.call("POST", "/api/sessions", alice, Json{{"booking_id", booking.body["id"]}});
    REQUIRE(s.status == 201);
    w.clock.set(w.demo.slots[0].end() + Minutes{5});
    CHECK(w.call("POST", "/api/admin/sweep", teacher).status == 403);
    const auto swept = w.call("POST", "/api/admin/sweep", admin);
    CHECK(swept.status == 200);
    CHECK(swept.body["ended"] == Json::array({s.body["id"]}));
    const auto snap = w.call("POST", "/api/admin/snapshot", admin);
    CHECK(snap.status == 200);
    CHECK(snap.body["as_of_seq"] == w.event_count());
  }
}

TEST_CASE("api: event visibility") {
  PlatformWorld w;
  const auto g0 = w.group(0);
  const auto g1 = w.group(1);
  const auto setup = w.demo.setups[0];
  const auto member = w.api->event_filter(g0.member_ids[0]);
  const auto teacher = w.api->event_filter(w.demo.teacher);
  const auto admin = w.api->event_filter(w.demo.admin);

  const Json own_chat{{"type", "chat"}, {"group_id", g0.id}};
  const Json other_chat{{"type", "chat"}, {"group_id", g1.id}};
  const Json sensor{{"type", "sensor"}, {"setup_id", setup}};
  const Json foreign_sensor{{"type", "sensor"}, {"setup_id", 999}};
  CHECK(member(own_chat));
  CHECK_FALSE(member(other_chat));
  CHECK(member(sensor));
  CHECK_FALSE(member(foreign_sensor));
  CHECK(teacher(own_chat));
  CHECK(teacher(other_chat));
  CHECK(admin(foreign_sensor));
  CHECK_FALSE(member(Json{{"type", "mystery"}}));
}

TEST_CASE("platform restart keeps state and ends leftover sessions") {
  const auto dir = std::filesystem::temp_directory_path() / ("rlab-platform-" + crypto::random_token(6));
  auto config = rlab::testing::small_config();
  config.data_dir = dir.string();
  config.fsync = false;
  std::uint64_t session = 0;
  std::uint64_t events = 0;
  {
    PlatformWorld w(config);
    const auto g0 = w.group(0);
    const auto alice = w.login_as(g0.member_ids[0]);
    const auto b = w.call("POST", "/api/bookings", alice, Json{{"group_id", g0.id}, {"slot_id", w.demo.slots[0].id}});
    w.clock.set(w.demo.slots[0].start);
    const auto s = w.call("POST", "/api/sessions", alice, Json{{"booking_id", b.body["id"]}});
    REQUIRE(s.status == 201);
    session = s.body["id"].get<std::uint64_t>();
    w.call("POST", "/api/groups/" + g0.id.str() + "/chat", alice, Json{{"body", "before restart"}});
    events = w.event_count();
  }
  {
    PlatformWorld w(config, false);
    CHECK(w.platform->recovered() == std::vector<SessionId>{SessionId{session}});
    CHECK(w.event_count() == events + 1);
    const auto rec = w.platform->store->read([&](const LabState& s) { return s.require_session(SessionId{session}); });
    CHECK(rec.state == SessionState::Ended);
    CHECK(rec.end_reason == "recovered");
    // Sessions already ended are not touched again.
    CHECK(w.platform->broker.recover(w.clock.now()).empty());
    const auto alice = w.login("student01", "pw-01");
    (void)alice;
    CHECK(w.platform->store->read([](const LabState& s) { return s.chat.begin()->second.back().body; }) == "before restart");
  }
  std::filesystem::remove_all(dir);
}
