#include "rlab/gateway/auth.hpp"

#include <vector>

#include "rlab/common/crypto.hpp"
#include "rlab/common/error.hpp"

namespace rlab::gateway {
namespace {

// Verified against when no user matches, so unknown names cost the same
// PBKDF2 work as wrong passwords.
const std::string& decoy_hash() {
  static const std::string hash = crypto::hash_credential(crypto::random_token(16), 20000);
  return hash;
}

}  // namespace

void to_json(Json& j, const AuthToken& v) {
  j = Json{{"token", v.token},
           {"user_id", v.user},
           {"role", v.role},
           {"issued_at", v.issued_at},
           {"expires_at", v.expires_at}};
}

AuthToken AuthService::authenticate(const std::string& display_name, const std::string& credential,
                                    std::optional<Role> role, TimePoint now) {
  const auto candidates = store_.read([&](const LabState& state) {
    std::vector<User> out;
    for (const auto& [id, u] : state.users) {
      if (u.display_name == display_name && (!role || u.role == *role)) out.push_back(u);
    }
    return out;
  });
  std::vector<const User*> matches;
  for (const auto& u : candidates) {
    if (crypto::verify_credential(credential, u.credential_hash)) matches.push_back(&u);
  }
  if (candidates.empty()) (void)crypto::verify_credential(credential, decoy_hash());
  if (matches.size() != 1) throw Error(Errc::InvalidCredentials, kInvalidCredentials);

  AuthToken t{crypto::random_token(32), matches[0]->id, matches[0]->role, now,
              now + std::chrono::duration_cast<std::chrono::seconds>(lifetime_)};
  std::lock_guard lock(mutex_);
  tokens_.emplace(t.token, t);
  return t;
}

AuthToken AuthService::resolve(const std::string& token, TimePoint now) const {
  std::lock_guard lock(mutex_);
  const auto it = tokens_.find(token);
  if (it == tokens_.end()) throw Error(Errc::TokenInvalid, "unknown or revoked token");
  if (now >= it->second.expires_at) throw Error(Errc::TokenExpired, "token expired");
  return it->second;
}

void AuthService::revoke(const std::string& token) {
  std::lock_guard lock(mutex_);
  tokens_.erase(token);
}

std::size_t AuthService::purge(TimePoint now) {
  std::lock_guard lock(mutex_);
  return std::erase_if(tokens_, [&](const auto& kv) { return now >= kv.second.expires_at; });
}

}  // namespace rlab::gateway
