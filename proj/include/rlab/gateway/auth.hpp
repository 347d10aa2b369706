#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "rlab/domain/store.hpp"

namespace rlab::gateway {

struct AuthToken {
  std::string token;
  UserId user;
  Role role = Role::Student;
  TimePoint issued_at{};
  TimePoint expires_at{};
};

void to_json(Json& j, const AuthToken& v);

/// Bearer tokens for API callers. Unknown users and wrong credentials fail
/// with the same error and message.
class AuthService {
 public:
  AuthService(Store& store, std::chrono::seconds lifetime = std::chrono::hours{12})
      : store_(store), lifetime_(lifetime) {}

  /// Display names are unique per role; without `role` the credential must
  /// match exactly one user of that name. Throws InvalidCredentials.
  AuthToken authenticate(const std::string& display_name, const std::string& credential,
                         std::optional<Role> role, TimePoint now);
  /// Throws TokenInvalid for unknown tokens and TokenExpired after expiry.
  AuthToken resolve(const std::string& token, TimePoint now) const;
  void revoke(const std::string& token);
  /// Drops expired tokens; returns how many.
  std::size_t purge(TimePoint now);

  static constexpr const char* kInvalidCredentials = "invalid credentials";

 private:
  Store& store_;
  std::chrono::seconds lifetime_;
  mutable std::mutex mutex_;
  std::map<std::string, AuthToken> tokens_;
};

}  // namespace rlab::gateway
