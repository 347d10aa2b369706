#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rlab {

enum class Errc {
  InvalidArgument,
  NotFound,
  PermissionDenied,
  DuplicateName,
  GroupSizeViolation,
  AlreadyGrouped,
  NotEnrolled,
  UnknownImage,
  OverlapExisting,
  InvalidWindow,
  SlotTaken,
  QuotaExceeded,
  NotEligible,
  SlotInPast,
  AlreadyStarted,
  PoolExhausted,
  DriverFailure,
  InvalidState,
  TooEarly,
  TooLate,
  NotParticipantEligible,
  SessionNotActive,
  TokenInvalid,
  TokenExpired,
  ConnectFailed,
  DuplicateUpstream,
  NoUpstream,
  StaleSequence,
  ChannelClosed,
  BodyTooLarge,
  UnknownChannel,
  KindMismatch,
  OutOfBounds,
  AdapterFailure,
  InvalidCredentials,
  StorageFailure,
  CorruptLog,
  ProtocolError,
};

std::string_view to_string(Errc code) noexcept;

/// Domain failure carrying a machine-readable code. Every module reports
/// expected failures this way; the gateway maps codes onto HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  explicit Error(Errc code) : Error(code, std::string(to_string(code))) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rlab
