#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rlab/domain/entities.hpp"

namespace rlab::gateway {

enum class Component {
  Auth,
  Directory,
  BookingScheduler,
  VmPool,
  SessionBroker,
  RdRelay,
  CollabServices,
  Persistence,
};

std::string_view to_string(Component c) noexcept;

struct Route {
  /// Path segments; "*" matches any single segment.
  std::string prefix;
  Component component;
  /// Empty means no authentication required.
  std::set<Role> roles;
};

struct RouteMatch {
  const Route* route = nullptr;
  /// Path below the matched prefix, starting with '/' or empty.
  std::string rest;
};

std::vector<std::string> split_path(std::string_view path);

/// Longest-prefix routing over whole path segments. Among equally long
/// matches the one with more literal segments wins, then table order.
class RouteTable {
 public:
  explicit RouteTable(std::vector<Route> routes);
  [[nodiscard]] std::optional<RouteMatch> route(std::string_view path) const;
  [[nodiscard]] const std::vector<Route>& routes() const { return routes_; }

  static RouteTable standard();

 private:
  std::vector<Route> routes_;
  std::vector<std::vector<std::string>> segments_;
};

}  // namespace rlab::gateway
