#include "rlab/gateway/api.hpp"

#include <charconv>
#include <set>

#include "rlab/booking/scheduler.hpp"
#include "rlab/common/crypto.hpp"

namespace rlab::gateway {

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::GroupSizeViolation:
    case Errc::InvalidWindow:
    case Errc::KindMismatch:
    case Errc::OutOfBounds:
    case Errc::ProtocolError:
    case Errc::StaleSequence:
      return 400;
    case Errc::InvalidCredentials:
    case Errc::TokenInvalid:
    case Errc::TokenExpired:
      return 401;
    case Errc::PermissionDenied:
    case Errc::NotParticipantEligible:
      return 403;
    case Errc::NotFound:
    case Errc::UnknownChannel:
    case Errc::UnknownImage:
      return 404;
    case Errc::BodyTooLarge:
      return 413;
    case Errc::DuplicateName:
    case Errc::AlreadyGrouped:
    case Errc::NotEnrolled:
    case Errc::OverlapExisting:
    case Errc::SlotTaken:
    case Errc::QuotaExceeded:
    case Errc::NotEligible:
    case Errc::SlotInPast:
    case Errc::AlreadyStarted:
    case Errc::InvalidState:
    case Errc::TooEarly:
    case Errc::TooLate:
    case Errc::SessionNotActive:
    case Errc::DuplicateUpstream:
    case Errc::NoUpstream:
    case Errc::ChannelClosed:
      return 409;
    case Errc::DriverFailure:
    case Errc::AdapterFailure:
    case Errc::ConnectFailed:
      return 502;
    case Errc::PoolExhausted:
      return 503;
    case Errc::StorageFailure:
    case Errc::CorruptLog:
      return 500;
  }
  return 500;
}

ApiResponse error_response(const Error& e) {
  // Clients see one code for every authorization refusal; the domain code
  // stays available as the reason.
  if (e.code() == Errc::NotParticipantEligible) {
    return {403, Json{{"error", "PermissionDenied"}, {"reason", std::string(to_string(e.code()))}, {"message", e.what()}}};
  }
  return {http_status(e.code()), Json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}};
}

std::string percent_decode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '+') {
      out.push_back(' ');
    } else if (c == '%') {
      unsigned v = 0;
      if (i + 2 >= text.size()) throw Error(Errc::InvalidArgument, "malformed percent escape");
      const auto r = std::from_chars(text.data() + i + 1, text.data() + i + 3, v, 16);
      if (r.ec != std::errc{} || r.ptr != text.data() + i + 3) {
        throw Error(Errc::InvalidArgument, "malformed percent escape");
      }
      out.push_back(static_cast<char>(v));
      i += 2;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::pair<std::string, std::map<std::string, std::string>> parse_target(std::string_view target) {
  const auto q = target.find('?');
  std::string path = percent_decode(target.substr(0, q));
  std::map<std::string, std::string> query;
  if (q != std::string_view::npos) {
    std::string_view rest = target.substr(q + 1);
    while (!rest.empty()) {
      const auto amp = rest.find('&');
      const auto part = rest.substr(0, amp);
      if (!part.empty()) {
        const auto eq = part.find('=');
        if (eq == std::string_view::npos) {
          query[percent_decode(part)] = "";
        } else {
          query[percent_decode(part.substr(0, eq))] = percent_decode(part.substr(eq + 1));
        }
      }
      if (amp == std::string_view::npos) break;
      rest = rest.substr(amp + 1);
    }
  }
  return {std::move(path), std::move(query)};
}

namespace {

std::uint64_t parse_id(std::string_view text) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || r.ec != std::errc{} || r.ptr != text.data() + text.size() || v == 0) {
    throw Error(Errc::InvalidArgument, "malformed id '" + std::string(text) + "'");
  }
  return v;
}

/// "{id}" captures one numeric segment; "{name}" matches any segment.
std::optional<std::vector<std::uint64_t>> match_pattern(std::string_view pattern,
                                                        const std::vector<std::string>& path) {
  const auto parts = split_path(pattern);
  if (parts.size() != path.size()) return std::nullopt;
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] == "{id}") {
      ids.push_back(0);
    } else if (parts[i] != "{name}" && parts[i] != path[i]) {
      return std::nullopt;
    }
  }
  std::size_t k = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i] == "{id}") ids[k++] = parse_id(path[i]);
  }
  return ids;
}

template <class T>
T field(const Json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) {
    throw Error(Errc::InvalidArgument, std::string("missing field '") + key + "'");
  }
  try {
    return body.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(Errc::InvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
std::optional<T> optional_field(const Json& body, const char* key) {
  if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) return std::nullopt;
  return field<T>(body, key);
}

std::optional<std::string> query_param(const ApiRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

std::uint64_t query_number(const ApiRequest& r, const std::string& key, std::uint64_t fallback) {
  const auto v = query_param(r, key);
  if (!v) return fallback;
  std::uint64_t n = 0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), n);
  if (v->empty() || res.ec != std::errc{} || res.ptr != v->data() + v->size()) {
    throw Error(Errc::InvalidArgument, "query parameter '" + key + "' must be a number");
  }
  return n;
}

Json public_user(const User& u) {
  return Json{{"id", u.id}, {"display_name", u.display_name}, {"role", u.role}};
}

ApiResponse created(Json body) { return {201, std::move(body)}; }

bool visible_group(const LabState& s, const Caller& c, GroupId g) {
  return decide(s, c, Action::ReadChat, g) == Decision::Allow;
}

}  // namespace

struct Api::Call {
  const ApiRequest& request;
  Json body;
  std::vector<std::uint64_t> ids;
  std::optional<AuthToken> auth;
  TimePoint now{};

  [[nodiscard]] UserId user() const { return auth->user; }
};

struct Api::Binding {
  Endpoint endpoint;
  Handler handler;
};

const std::vector<Api::Binding>& Api::bindings() {
  static const std::vector<Binding> table = {
      {{"POST", "/api/auth/login", std::nullopt, false}, &Api::login},
      {{"POST", "/api/auth/logout", std::nullopt, false}, &Api::logout},
      {{"GET", "/api/me", std::nullopt, false}, &Api::me},
      {{"POST", "/api/users", Action::CreateUser, true}, &Api::create_user},
      {{"POST", "/api/courses", Action::CreateCourse, true}, &Api::create_course},
      {{"POST", "/api/courses/{id}/students", Action::EnrollStudent, true}, &Api::enroll_student},
      {{"POST", "/api/courses/{id}/setups", Action::LinkSetup, true}, &Api::link_setup},
      {{"POST", "/api/groups", Action::CreateGroup, true}, &Api::create_group},
      {{"GET", "/api/groups", Action::ReadChat, false}, &Api::list_groups},
      {{"POST", "/api/images", Action::RegisterImage, true}, &Api::register_image},
      {{"POST", "/api/setups", Action::RegisterSetup, true}, &Api::register_setup},
      {{"GET", "/api/setups", std::nullopt, false}, &Api::list_setups},
      {{"POST", "/api/setups/{id}/slots", Action::GenerateSlots, true}, &Api::generate_slots},
      {{"GET", "/api/setups/{id}/slots", Action::ListSlots, false}, &Api::list_slots},
      {{"POST", "/api/bookings", Action::BookSlot, true}, &Api::book},
      {{"DELETE", "/api/bookings/{id}", Action::CancelBooking, true}, &Api::cancel},
      {{"GET", "/api/bookings", Action::ViewQuota, false}, &Api::list_bookings},
      {{"GET", "/api/groups/{id}/quota", Action::ViewQuota, false}, &Api::quota},
      {{"GET", "/api/setups/{id}/pool", Action::ViewPool, false}, &Api::pool_status},
      {{"POST", "/api/sessions", Action::StartSession, true}, &Api::start_session},
      {{"GET", "/api/sessions", Action::ReadChat, false}, &Api::list_sessions},
      {{"POST", "/api/sessions/{id}/join", Action::JoinSession, true}, &Api::join_session},
      {{"DELETE", "/api/sessions/{id}", Action::EndSession, true}, &Api::end_session},
      {{"GET", "/api/sessions/{id}/descriptor", std::nullopt, false}, &Api::descriptor},
      {{"POST", "/api/groups/{id}/chat", Action::PostChat, true}, &Api::post_chat},
      {{"GET", "/api/groups/{id}/chat", Action::ReadChat, false}, &Api::read_chat},
      {{"GET", "/api/setups/{id}/channels", Action::ListChannels, false}, &Api::list_channels},
      {{"GET", "/api/channels/{name}", Action::ReadSensor, false}, &Api::read_channel},
      {{"POST", "/api/channels/{name}/write", Action::WriteActuator, true}, &Api::write_channel},
      {{"POST", "/api/admin/snapshot", Action::TakeSnapshot, true}, &Api::snapshot},
      {{"POST", "/api/admin/sweep", Action::RunSweep, true}, &Api::sweep},
  };
  return table;
}

const std::vector<Endpoint>& Api::endpoints() {
  static const std::vector<Endpoint> list = [] {
    std::vector<Endpoint> out;
    for (const auto& b : bindings()) out.push_back(b.endpoint);
    return out;
  }();
  return list;
}

AuthToken Api::bearer(const ApiRequest& request) const {
  auto it = request.headers.find("authorization");
  if (it == request.headers.end()) throw Error(Errc::TokenInvalid, "missing bearer token");
  const std::string_view value = it->second;
  constexpr std::string_view prefix = "Bearer ";
  if (value.size() <= prefix.size() || value.substr(0, prefix.size()) != prefix) {
    throw Error(Errc::TokenInvalid, "malformed authorization header");
  }
  return platform_.auth.resolve(std::string(value.substr(prefix.size())), platform_.clock.now());
}

ApiResponse Api::handle(const ApiRequest& request) {
  try {
    const auto match = routes_.route(request.path);
    if (!match) throw Error(Errc::NotFound, "no route for " + request.path);

    const auto segments = split_path(request.path);
    const Binding* binding = nullptr;
    std::vector<std::uint64_t> ids;
    bool path_known = false;
    for (const auto& b : bindings()) {
      auto m = match_pattern(b.endpoint.pattern, segments);
      if (!m) continue;
      path_known = true;
      if (b.endpoint.method == request.method) {
        binding = &b;
        ids = std::move(*m);
        break;
      }
    }
    if (!binding) {
      if (path_known) {
        return {405, Json{{"error", "MethodNotAllowed"}, {"message", request.method + " not allowed on " + request.path}}};
      }
      throw Error(Errc::NotFound, "no endpoint for " + request.path);
    }

    Call call{request, Json::object(), std::move(ids), std::nullopt, platform_.clock.now()};
    const auto& roles = match->route->roles;
    if (!roles.empty()) {
      call.auth = bearer(request);
      if (!roles.contains(call.auth->role)) {
        throw Error(Errc::PermissionDenied, std::string(to_string(call.auth->role)) + " may not use " +
                                                std::string(to_string(match->route->component)));
      }
    }
    if (!request.body.empty()) {
      try {
        call.body = Json::parse(request.body);
      } catch (const Json::parse_error&) {
        throw Error(Errc::InvalidArgument, "request body is not valid JSON");
      }
    }
    return (this->*(binding->handler))(call);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const Json::exception& e) {
    return error_response(Error(Errc::InvalidArgument, e.what()));
  }
}

ApiResponse Api::login(const Call& c) {
  std::optional<Role> role;
  if (auto r = optional_field<std::string>(c.body, "role")) role = parse_role(*r);
  const auto token = platform_.auth.authenticate(field<std::string>(c.body, "display_name"),
                                                 field<std::string>(c.body, "credential"), role, c.now);
  return {200, token};
}

ApiResponse Api::logout(const Call& c) {
  const auto token = bearer(c.request);
  platform_.auth.revoke(token.token);
  return {200, Json{{"revoked", true}}};
}

ApiResponse Api::me(const Call& c) {
  return {200, platform_.store->read([&](const LabState& s) {
    const auto& u = s.require_user(c.user());
    Json groups = Json::array();
    for (const auto& [id, g] : s.groups) {
      if (g.has_member(u.id)) groups.push_back(id);
    }
    Json courses = Json::array();
    for (const auto& [id, course] : s.courses) {
      if (course.teacher_id == u.id || course.student_ids.contains(u.id)) courses.push_back(id);
    }
    Json j = public_user(u);
    j["groups"] = groups;
    j["courses"] = courses;
    j["token_expires_at"] = c.auth->expires_at;
    return j;
  })};
}

ApiResponse Api::create_user(const Call& c) {
  const auto u = platform_.directory.create_user(c.user(), field<std::string>(c.body, "display_name"),
                                                 parse_role(field<std::string>(c.body, "role")),
                                                 field<std::string>(c.body, "credential"));
  return created(public_user(u));
}

ApiResponse Api::create_course(const Call& c) {
  const auto teacher = optional_field<std::uint64_t>(c.body, "teacher_id");
  const auto course = platform_.directory.create_course(c.user(), teacher ? UserId{*teacher} : c.user(),
                                                        field<std::string>(c.body, "title"));
  return created(course);
}

ApiResponse Api::enroll_student(const Call& c) {
  return {200, platform_.directory.enroll_student(c.user(), CourseId{c.ids[0]},
                                                  UserId{field<std::uint64_t>(c.body, "student_id")})};
}

ApiResponse Api::link_setup(const Call& c) {
  return {200, platform_.directory.link_setup(c.user(), CourseId{c.ids[0]},
                                              SetupId{field<std::uint64_t>(c.body, "setup_id")})};
}

ApiResponse Api::create_group(const Call& c) {
  std::vector<UserId> members;
  for (auto id : field<std::vector<std::uint64_t>>(c.body, "member_ids")) members.emplace_back(id);
  return created(platform_.directory.create_group(c.user(), CourseId{field<std::uint64_t>(c.body, "course_id")},
                                                  members));
}

ApiResponse Api::list_groups(const Call& c) {
  return {200, platform_.store->read([&](const LabState& s) {
    const auto caller = caller_of(s, c.user());
    Json out = Json::array();
    for (const auto& [id, g] : s.groups) {
      if (visible_group(s, caller, id)) out.push_back(g);
    }
    return out;
  })};
}

ApiResponse Api::register_image(const Call& c) {
  const auto content = crypto::base64_decode(field<std::string>(c.body, "content_base64"));
  const auto record = platform_.pool.register_image(
      c.user(), field<std::string>(c.body, "label"),
      std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
  return created(record);
}

ApiResponse Api::register_setup(const Call& c) {
  std::vector<ChannelDescriptor> channels;
  if (c.body.contains("channels")) {
    try {
      channels = c.body.at("channels").get<std::vector<ChannelDescriptor>>();
    } catch (const Json::exception& e) {
      throw Error(Errc::InvalidArgument, std::string("malformed channels: ") + e.what());
    }
  }
  const auto setup = platform_.directory.register_lab_setup(
      c.user(), field<std::string>(c.body, "name"), field<std::string>(c.body, "base_image"), channels,
      optional_field<std::string>(c.body, "camera_source").value_or(""));
  return created(setup);
}

ApiResponse Api::list_setups(const Call& c) {
  return {200, platform_.store->read([&](const LabState& s) {
    const auto caller = caller_of(s, c.user());
    std::set<SetupId> visible;
    for (const auto& [id, course] : s.courses) {
      if (caller.role == Role::Administrator || course.teacher_id == caller.id || course.student_ids.contains(caller.id)) {
        visible.insert(course.setup_ids.begin(), course.setup_ids.end());
      }
    }
    Json out = Json::array();
    for (const auto& [id, setup] : s.setups) {
      if (caller.role == Role::Administrator || visible.contains(id)) out.push_back(setup);
    }
    return out;
  })};
}

ApiResponse Api::generate_slots(const Call& c) {
  const auto minutes = optional_field<long long>(c.body, "slot_minutes").value_or(60);
  if (minutes <= 0) throw Error(Errc::InvalidArgument, "slot_minutes must be positive");
  const auto slots = platform_.scheduler.generate_slots(
      c.user(), SetupId{c.ids[0]}, parse_iso8601(field<std::string>(c.body, "from")),
      parse_iso8601(field<std::string>(c.body, "to")), Minutes{minutes});
  return created(slots);
}

ApiResponse Api::list_slots(const Call& c) {
  const SetupId setup{c.ids[0]};
  platform_.store->read([&](const LabState& s) {
    require_permission(s, caller_of(s, c.user()), Action::ListSlots, setup);
  });
  const auto from_text = query_param(c.request, "from");
  const auto to_text = query_param(c.request, "to");
  const TimePoint from = from_text ? parse_iso8601(*from_text) : iso_week_start(iso_week_of(c.now));
  const TimePoint to = to_text ? parse_iso8601(*to_text) : from + std::chrono::days{7};
  if (to <= from) throw Error(Errc::InvalidWindow, "'to' must be after 'from'");
  Json out = Json::array();
  for (const auto& a : platform_.scheduler.list_available(setup, from, to)) {
    Json j = a.slot;
    j["available"] = a.available;
    out.push_back(std::move(j));
  }
  return {200, out};
}

ApiResponse Api::book(const Call& c) {
  return created(platform_.scheduler.book_slot(c.user(), GroupId{field<std::uint64_t>(c.body, "group_id")},
                                               SlotId{field<std::uint64_t>(c.body, "slot_id")}, c.now));
}

ApiResponse Api::cancel(const Call& c) {
  return {200, platform_.scheduler.cancel_booking(c.user(), BookingId{c.ids[0]}, c.now)};
}

ApiResponse Api::list_bookings(const Call& c) {
  const auto only = query_param(c.request, "group_id");
  const bool filtered = only.has_value();
  const GroupId filter{filtered ? parse_id(*only) : 0};
  return {200, platform_.store->read([&](const LabState& s) {
    const auto caller = caller_of(s, c.user());
    if (filtered) require_permission(s, caller, Action::ViewQuota, filter);
    Json out = Json::array();
    for (const auto& [id, b] : s.bookings) {
      if (b.state != BookingState::Active) continue;
      if (filtered && b.group_id != filter) continue;
      if (decide(s, caller, Action::ViewQuota, b.group_id) != Decision::Allow) continue;
      Json j = b;
      j["slot"] = s.require_slot(b.slot_id);
      out.push_back(std::move(j));
    }
    return out;
  })};
}

ApiResponse Api::quota(const Call& c) {
  const GroupId group{c.ids[0]};
  const auto week_text = query_param(c.request, "week");
  const IsoWeek week = week_text ? IsoWeek::parse(*week_text) : iso_week_of(c.now);
  const auto setup_text = query_param(c.request, "setup_id");
  const std::optional<SetupId> setup =
      setup_text ? std::optional<SetupId>(SetupId{parse_id(*setup_text)}) : std::nullopt;
  const auto used = platform_.store->read([&](const LabState& s) {
    require_permission(s, caller_of(s, c.user()), Action::ViewQuota, group);
    const bool per_setup = platform_.scheduler.policy().scope == booking::QuotaScope::PerSetup;
    return booking::count_active_in_week(s, group, week, per_setup ? setup : std::nullopt);
  });
  const auto remaining = platform_.scheduler.quota_remaining(group, week, setup);
  const auto& limit = platform_.scheduler.policy().max_slots_per_group_per_week;
  Json j{{"group_id", group}, {"week", week.str()}, {"used", used}};
  j["limit"] = limit ? Json(*limit) : Json(nullptr);
  j["remaining"] = remaining ? Json(*remaining) : Json(nullptr);
  return {200, j};
}

ApiResponse Api::pool_status(const Call& c) {
  const SetupId setup{c.ids[0]};
  platform_.store->read([&](const LabState& s) {
    require_permission(s, caller_of(s, c.user()), Action::ViewPool, setup);
  });
  const auto st = platform_.pool.pool_status(setup);
  return {200, Json{{"setup_id", setup},
                    {"capacity", platform_.pool.config().capacity_for(setup)},
                    {"available", st.available},
                    {"assigned", st.assigned},
                    {"resetting", st.resetting},
                    {"failed", st.failed}}};
}

ApiResponse Api::start_session(const Call& c) {
  return created(platform_.broker.start_session(c.user(), BookingId{field<std::uint64_t>(c.body, "booking_id")}, c.now));
}

ApiResponse Api::list_sessions(const Call& c) {
  const bool all = query_param(c.request, "all").value_or("") == "true";
  return {200, platform_.store->read([&](const LabState& s) {
    const auto caller = caller_of(s, c.user());
    Json out = Json::array();
    for (const auto& [id, rec] : s.sessions) {
      if (!all && rec.state == SessionState::Ended) continue;
      const auto& b = s.require_booking(rec.booking_id);
      if (!visible_group(s, caller, b.group_id)) continue;
      Json j = rec;
      j["group_id"] = b.group_id;
      j["setup_id"] = s.require_slot(b.slot_id).setup_id;
      out.push_back(std::move(j));
    }
    return out;
  })};
}

ApiResponse Api::join_session(const Call& c) {
  const auto token = platform_.broker.join_session(c.user(), SessionId{c.ids[0]}, c.now);
  Json j = token;
  j["descriptor"] = platform_.broker.session_descriptor(token.session, token.token, c.now);
  return {200, j};
}

ApiResponse Api::end_session(const Call& c) {
  return {200, platform_.broker.end_session(c.user(), SessionId{c.ids[0]}, c.now)};
}

void Api::require_participant(const Call& c, const std::string& token) const {
  const auto p = platform_.broker.validate_token(token, c.now);
  if (!p) throw Error(Errc::TokenInvalid, "participant token invalid or expired");
  if (p->user != c.user()) throw Error(Errc::PermissionDenied, "participant token belongs to another user");
}

ApiResponse Api::descriptor(const Call& c) {
  auto token = query_param(c.request, "token");
  if (!token) {
    auto it = c.request.headers.find("x-session-token");
    if (it != c.request.headers.end()) token = it->second;
  }
  if (!token) throw Error(Errc::TokenInvalid, "missing participant token");
  require_participant(c, *token);
  return {200, platform_.broker.session_descriptor(SessionId{c.ids[0]}, *token, c.now)};
}

ApiResponse Api::post_chat(const Call& c) {
  return created(platform_.chat.post_message(c.user(), GroupId{c.ids[0]}, field<std::string>(c.body, "body")));
}

ApiResponse Api::read_chat(const Call& c) {
  const auto after = query_number(c.request, "after", 0);
  const auto limit = query_number(c.request, "limit", 100);
  if (limit > 1000) throw Error(Errc::InvalidArgument, "limit must be at most 1000");
  return {200, platform_.chat.chat_history(c.user(), GroupId{c.ids[0]}, after, limit)};
}

ApiResponse Api::list_channels(const Call& c) {
  return {200, platform_.hw.list_channels(c.user(), SetupId{c.ids[0]})};
}

ApiResponse Api::read_channel(const Call& c) {
  const auto segments = split_path(c.request.path);
  const auto& channel_id = segments.at(2);
  const SetupId setup{parse_id(query_param(c.request, "setup_id").value_or(""))};
  const auto token = query_param(c.request, "token").value_or("");
  require_participant(c, token);
  const auto kind = platform_.store->read([&](const LabState& s) {
    const auto* ch = s.require_setup(setup).find_channel(channel_id);
    if (!ch) throw Error(Errc::UnknownChannel, "unknown channel '" + channel_id + "'");
    return ch->kind;
  });
  const auto r = kind == ChannelKind::Sensor ? platform_.hw.read_sensor(setup, channel_id, token)
                                             : platform_.hw.actuator_state(setup, channel_id, token);
  return {200, Json{{"setup_id", setup}, {"channel_id", channel_id}, {"kind", kind},
                    {"value", channel_value_to_json(r.value)}, {"at", r.at}}};
}

ApiResponse Api::write_channel(const Call& c) {
  const auto segments = split_path(c.request.path);
  const auto& channel_id = segments.at(2);
  const SetupId setup{field<std::uint64_t>(c.body, "setup_id")};
  const auto token = field<std::string>(c.body, "token");
  require_participant(c, token);
  if (!c.body.contains("value")) throw Error(Errc::InvalidArgument, "missing field 'value'");
  const auto applied = platform_.hw.set_actuator(setup, channel_id, channel_value_from_json(c.body.at("value")), token);
  return {200, Json{{"setup_id", setup}, {"channel_id", channel_id}, {"value", channel_value_to_json(applied)}}};
}

ApiResponse Api::snapshot(const Call& c) {
  platform_.store->read([&](const LabState& s) {
    require_permission(s, caller_of(s, c.user()), Action::TakeSnapshot);
  });
  const auto snap = platform_.store->take_snapshot();
  return {200, Json{{"as_of_seq", snap.as_of_seq}}};
}

ApiResponse Api::sweep(const Call& c) {
  platform_.store->read([&](const LabState& s) {
    require_permission(s, caller_of(s, c.user()), Action::RunSweep);
  });
  const auto out = platform_.sweep();
  Json vms = Json::array();
  for (const auto& v : out.vms) vms.push_back(Json{{"vm_id", v.vm}, {"reset", v.reset}, {"error", v.error}});
  return {200, Json{{"ended", out.ended}, {"vms", vms}}};
}

collab::Subscription::Filter Api::event_filter(UserId user) const {
  struct Visibility {
    bool everything = false;
    std::set<GroupId> groups;
    std::set<SetupId> setups;
  };
  const auto v = platform_.store->read([&](const LabState& s) {
    Visibility out;
    const auto caller = caller_of(s, user);
    out.everything = caller.role == Role::Administrator;
    for (const auto& [id, g] : s.groups) {
      if (!visible_group(s, caller, id)) continue;
      out.groups.insert(id);
      const auto& setups = s.require_course(g.course_id).setup_ids;
      out.setups.insert(setups.begin(), setups.end());
    }
    return out;
  });
  return [v](const Json& e) {
    if (v.everything) return true;
    if (e.contains("group_id")) return v.groups.contains(e.at("group_id").get<GroupId>());
    if (e.contains("setup_id")) return v.setups.contains(e.at("setup_id").get<SetupId>());
    return false;
  };
}

SetupId Api::camera_setup(SessionId session, const std::string& participant_token) const {
  return platform_.broker.session_descriptor(session, participant_token, platform_.clock.now()).setup;
}

}  // namespace rlab::gateway
