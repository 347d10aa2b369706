#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlab/domain/entities.hpp"
#include "rlab/persistence/event_log.hpp"

namespace rlab {

/// Event kinds written to the log. Payload schemas are the entity JSON forms.
namespace event_kind {
inline constexpr const char* kUserCreated = "user_created";
inline constexpr const char* kCourseCreated = "course_created";
inline constexpr const char* kStudentEnrolled = "student_enrolled";
inline constexpr const char* kGroupCreated = "group_created";
inline constexpr const char* kImageRegistered = "image_registered";
inline constexpr const char* kSetupRegistered = "setup_registered";
inline constexpr const char* kSetupLinked = "setup_linked";
inline constexpr const char* kSlotsGenerated = "slots_generated";
inline constexpr const char* kBookingCreated = "booking_created";
inline constexpr const char* kBookingCancelled = "booking_cancelled";
inline constexpr const char* kSessionStarted = "session_started";
inline constexpr const char* kParticipantJoined = "participant_joined";
inline constexpr const char* kSessionEnded = "session_ended";
inline constexpr const char* kChatPosted = "chat_posted";
inline constexpr const char* kActuatorWritten = "actuator_written";
}  // namespace event_kind

/// Throws Error(InvalidArgument) when the payload does not match its kind.
void validate_event_payload(const std::string& kind, const Json& payload);

/// Every committed entity, materialized from the event log. A plain value:
/// copying it gives an independent snapshot.
struct LabState {
  std::map<UserId, User> users;
  std::map<CourseId, Course> courses;
  std::map<GroupId, Group> groups;
  std::map<std::string, ImageRecord> images;
  std::map<SetupId, LabSetup> setups;
  std::map<SlotId, TimeSlot> slots;
  std::map<BookingId, Booking> bookings;
  std::map<SessionId, SessionRecord> sessions;
  std::map<GroupId, std::vector<ChatMessage>> chat;
  std::vector<ActuatorWrite> actuator_audit;

  // Derived indexes, rebuilt on load.
  std::map<SlotId, BookingId> active_booking_by_slot;
  std::map<SetupId, std::vector<SlotId>> slots_by_setup;

  void apply(const persistence::DomainEvent& event);

  [[nodiscard]] Json to_json() const;
  static LabState from_json(const Json& j);
  /// Canonical byte form; equal states give identical strings.
  [[nodiscard]] std::string canonical() const { return to_json().dump(); }

  // Id allocation for the single writer.
  [[nodiscard]] UserId next_user_id() const;
  [[nodiscard]] CourseId next_course_id() const;
  [[nodiscard]] GroupId next_group_id() const;
  [[nodiscard]] SetupId next_setup_id() const;
  [[nodiscard]] SlotId next_slot_id() const;
  [[nodiscard]] BookingId next_booking_id() const;
  [[nodiscard]] SessionId next_session_id() const;
  [[nodiscard]] ChatMessageId next_chat_message_id() const;

  // Lookups. require_* throw Error(NotFound).
  [[nodiscard]] const User& require_user(UserId id) const;
  [[nodiscard]] const Course& require_course(CourseId id) const;
  [[nodiscard]] const Group& require_group(GroupId id) const;
  [[nodiscard]] const LabSetup& require_setup(SetupId id) const;
  [[nodiscard]] const TimeSlot& require_slot(SlotId id) const;
  [[nodiscard]] const Booking& require_booking(BookingId id) const;
  [[nodiscard]] const SessionRecord& require_session(SessionId id) const;

  [[nodiscard]] const User* find_user_by_name(const std::string& name, Role role) const;
  [[nodiscard]] std::optional<GroupId> group_of(CourseId course, UserId student) const;
  [[nodiscard]] bool setup_linked_to_course(SetupId setup, CourseId course) const;
  [[nodiscard]] std::optional<BookingId> active_booking_for(SlotId slot) const;
  /// Active, not Ended, session attached to the booking.
  [[nodiscard]] const SessionRecord* live_session_for(BookingId booking) const;
  [[nodiscard]] std::uint64_t last_chat_seq(GroupId group) const;

 private:
  void rebuild_indexes();
  std::uint64_t last_chat_id_ = 0;
};

}  // namespace rlab
