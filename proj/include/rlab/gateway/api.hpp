#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rlab/collab/event_bus.hpp"
#include "rlab/common/error.hpp"
#include "rlab/gateway/auth.hpp"
#include "rlab/gateway/routes.hpp"
#include "rlab/platform/platform.hpp"

namespace rlab::gateway {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  /// Lower-case header names.
  std::map<std::string, std::string> headers;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  Json body;
  std::string content_type = "application/json";
};

/// One HTTP/JSON operation. `action` is the matrix row the handler enforces,
/// if any; `mutating` endpoints may commit events.
struct Endpoint {
  std::string_view method;
  std::string_view pattern;
  std::optional<Action> action;
  bool mutating = false;
};

int http_status(Errc code) noexcept;
ApiResponse error_response(const Error& e);

/// Splits "a/b?x=1&y=%20" into a decoded path and query map.
std::pair<std::string, std::map<std::string, std::string>> parse_target(std::string_view target);
std::string percent_decode(std::string_view text);

/// Transport-independent request handling for the HTTP surface. The socket
/// and streaming endpoints are served by the HTTP server, which uses the
/// access helpers below.
class Api {
 public:
  explicit Api(Platform& platform) : platform_(platform), routes_(RouteTable::standard()) {}

  ApiResponse handle(const ApiRequest& request);

  static const std::vector<Endpoint>& endpoints();
  [[nodiscard]] const RouteTable& routes() const { return routes_; }

  /// Bearer token from the Authorization header; throws TokenInvalid when
  /// absent and whatever resolve() throws.
  AuthToken bearer(const ApiRequest& request) const;

  /// Live events the user may see: chat and session changes of groups they
  /// can read, hardware events of setups linked to those groups' courses.
  /// Visibility is fixed when the filter is built.
  collab::Subscription::Filter event_filter(UserId user) const;

  /// Setup whose camera the participant token may watch; throws TokenInvalid.
  SetupId camera_setup(SessionId session, const std::string& participant_token) const;

  Platform& platform() { return platform_; }

 private:
  struct Call;
  using Handler = ApiResponse (Api::*)(const Call&);
  struct Binding;
  static const std::vector<Binding>& bindings();

  ApiResponse login(const Call&);
  ApiResponse logout(const Call&);
  ApiResponse me(const Call&);
  ApiResponse create_user(const Call&);
  ApiResponse create_course(const Call&);
  ApiResponse enroll_student(const Call&);
  ApiResponse link_setup(const Call&);
  ApiResponse create_group(const Call&);
  ApiResponse list_groups(const Call&);
  ApiResponse register_image(const Call&);
  ApiResponse register_setup(const Call&);
  ApiResponse list_setups(const Call&);
  ApiResponse generate_slots(const Call&);
  ApiResponse list_slots(const Call&);
  ApiResponse book(const Call&);
  ApiResponse cancel(const Call&);
  ApiResponse list_bookings(const Call&);
  ApiResponse quota(const Call&);
  ApiResponse pool_status(const Call&);
  ApiResponse start_session(const Call&);
  ApiResponse list_sessions(const Call&);
  ApiResponse join_session(const Call&);
  ApiResponse end_session(const Call&);
  ApiResponse descriptor(const Call&);
  ApiResponse post_chat(const Call&);
  ApiResponse read_chat(const Call&);
  ApiResponse list_channels(const Call&);
  ApiResponse read_channel(const Call&);
  ApiResponse write_channel(const Call&);
  ApiResponse snapshot(const Call&);
  ApiResponse sweep(const Call&);

  void require_participant(const Call& call, const std::string& token) const;

  Platform& platform_;
  RouteTable routes_;
};

}  // namespace rlab::gateway
