#include "rlab/common/error.hpp"

namespace rlab {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NotFound: return "NotFound";
    case Errc::PermissionDenied: return "PermissionDenied";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::GroupSizeViolation: return "GroupSizeViolation";
    case Errc::AlreadyGrouped: return "AlreadyGrouped";
    case Errc::NotEnrolled: return "NotEnrolled";
    case Errc::UnknownImage: return "UnknownImage";
    case Errc::OverlapExisting: return "OverlapExisting";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::SlotTaken: return "SlotTaken";
    case Errc::QuotaExceeded: return "QuotaExceeded";
    case Errc::NotEligible: return "NotEligible";
    case Errc::SlotInPast: return "SlotInPast";
    case Errc::AlreadyStarted: return "AlreadyStarted";
    case Errc::PoolExhausted: return "PoolExhausted";
    case Errc::DriverFailure: return "DriverFailure";
    case Errc::InvalidState: return "InvalidState";
    case Errc::TooEarly: return "TooEarly";
    case Errc::TooLate: return "TooLate";
    case Errc::NotParticipantEligible: return "NotParticipantEligible";
    case Errc::SessionNotActive: return "SessionNotActive";
    case Errc::TokenInvalid: return "TokenInvalid";
    case Errc::TokenExpired: return "TokenExpired";
    case Errc::ConnectFailed: return "ConnectFailed";
    case Errc::DuplicateUpstream: return "DuplicateUpstream";
    case Errc::NoUpstream: return "NoUpstream";
    case Errc::StaleSequence: return "StaleSequence";
    case Errc::ChannelClosed: return "ChannelClosed";
    case Errc::BodyTooLarge: return "BodyTooLarge";
    case Errc::UnknownChannel: return "UnknownChannel";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::AdapterFailure: return "AdapterFailure";
    case Errc::InvalidCredentials: return "InvalidCredentials";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::CorruptLog: return "CorruptLog";
    case Errc::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

}  // namespace rlab
