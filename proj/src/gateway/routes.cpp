#include "rlab/gateway/routes.hpp"

#include "rlab/common/error.hpp"

namespace rlab::gateway {

std::string_view to_string(Component c) noexcept {
  switch (c) {
    case Component::Auth: return "auth";
    case Component::Directory: return "directory";
    case Component::BookingScheduler: return "booking-scheduler";
    case Component::VmPool: return "vm-pool";
    case Component::SessionBroker: return "session-broker";
    case Component::RdRelay: return "rd-relay";
    case Component::CollabServices: return "collab-services";
    case Component::Persistence: return "persistence";
  }
  return "unknown";
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) out.emplace_back(path.substr(i, end - i));
    i = end;
  }
  return out;
}

RouteTable::RouteTable(std::vector<Route> routes) : routes_(std::move(routes)) {
  for (const auto& r : routes_) {
    auto segs = split_path(r.prefix);
    if (segs.empty()) throw Error(Errc::InvalidArgument, "empty route prefix");
    segments_.push_back(std::move(segs));
  }
}

std::optional<RouteMatch> RouteTable::route(std::string_view path) const {
  const auto segs = split_path(path);
  std::optional<std::size_t> best;
  std::size_t best_len = 0;
  std::size_t best_literals = 0;
  for (std::size_t r = 0; r < routes_.size(); ++r) {
    const auto& pattern = segments_[r];
    if (pattern.size() > segs.size()) continue;
    bool ok = true;
    std::size_t literals = 0;
    for (std::size_t k = 0; k < pattern.size() && ok; ++k) {
      if (pattern[k] == "*") continue;
      ok = pattern[k] == segs[k];
      ++literals;
    }
    if (!ok) continue;
    if (!best || pattern.size() > best_len || (pattern.size() == best_len && literals > best_literals)) {
      best = r;
      best_len = pattern.size();
      best_literals = literals;
    }
  }
  if (!best) return std::nullopt;
  RouteMatch m;
  m.route = &routes_[*best];
  for (std::size_t k = best_len; k < segs.size(); ++k) m.rest += "/" + segs[k];
  return m;
}

RouteTable RouteTable::standard() {
  const std::set<Role> any{Role::Administrator, Role::Teacher, Role::Student};
  const std::set<Role> staff{Role::Administrator, Role::Teacher};
  const std::set<Role> admin{Role::Administrator};
  return RouteTable({
      {"/api/auth", Component::Auth, {}},
      {"/api/me", Component::Auth, any},
      {"/api/users", Component::Directory, admin},
      {"/api/courses", Component::Directory, staff},
      {"/api/groups", Component::Directory, any},
      {"/api/groups/*/quota", Component::BookingScheduler, any},
      {"/api/groups/*/chat", Component::CollabServices, any},
      {"/api/images", Component::VmPool, admin},
      {"/api/setups", Component::Directory, any},
      {"/api/setups/*/slots", Component::BookingScheduler, any},
      {"/api/setups/*/channels", Component::CollabServices, any},
      {"/api/setups/*/pool", Component::VmPool, admin},
      {"/api/bookings", Component::BookingScheduler, any},
      {"/api/sessions", Component::SessionBroker, any},
      {"/api/channels", Component::CollabServices, any},
      {"/api/admin/snapshot", Component::Persistence, admin},
      {"/api/admin/sweep", Component::SessionBroker, admin},
      // Upgrade endpoints authenticate with a query token instead.
      {"/ws/relay", Component::RdRelay, {}},
      {"/ws/events", Component::CollabServices, {}},
      {"/stream/camera", Component::CollabServices, {}},
  });
}

}  // namespace rlab::gateway
