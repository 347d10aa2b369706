#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlab/common/ids.hpp"
#include "rlab/common/time.hpp"

namespace rlab {

using Json = nlohmann::json;

enum class Role { Administrator, Teacher, Student };

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view text);

struct User {
  UserId id;
  std::string display_name;
  Role role = Role::Student;
  std::string credential_hash;
};

struct Course {
  CourseId id;
  std::string title;
  UserId teacher_id;
  std::set<UserId> student_ids;
  std::set<SetupId> setup_ids;
};

struct Group {
  GroupId id;
  CourseId course_id;
  std::vector<UserId> member_ids;

  [[nodiscard]] bool has_member(UserId user) const;
};

enum class ChannelKind { Sensor, Actuator };
enum class ChannelDatatype { Float, Bool };

using ChannelValue = std::variant<double, bool>;

struct ChannelDescriptor {
  std::string channel_id;
  ChannelKind kind = ChannelKind::Sensor;
  ChannelDatatype datatype = ChannelDatatype::Float;
  std::string unit;
  double min = 0.0;
  double max = 0.0;

  bool operator==(const ChannelDescriptor&) const = default;
};

struct ImageRecord {
  std::string digest;  // lowercase hex SHA-256
  std::string label;
  std::uint64_t size = 0;
};

struct LabSetup {
  SetupId id;
  std::string name;
  std::string base_image;
  std::vector<ChannelDescriptor> hardware_channels;
  std::string camera_source;
  bool enabled = true;

  [[nodiscard]] const ChannelDescriptor* find_channel(std::string_view channel_id) const;
};

struct TimeSlot {
  SlotId id;
  SetupId setup_id;
  TimePoint start{};
  Minutes duration{0};

  [[nodiscard]] TimePoint end() const { return start + duration; }
};

enum class BookingState { Active, Cancelled };

struct Booking {
  BookingId id;
  SlotId slot_id;
  GroupId group_id;
  TimePoint created_at{};
  BookingState state = BookingState::Active;
};

enum class SessionState { Starting, Active, Ending, Ended };

std::string_view to_string(SessionState state) noexcept;

struct SessionRecord {
  SessionId id;
  BookingId booking_id;
  VmId vm_id;
  std::string conference_room;
  SessionState state = SessionState::Active;
  std::set<UserId> participants;
  TimePoint started_at{};
  std::optional<TimePoint> ended_at;
  std::string end_reason;
};

struct ChatMessage {
  ChatMessageId id;
  GroupId group_id;
  UserId author;
  std::string body;
  TimePoint at{};
  std::uint64_t seq = 0;

  bool operator==(const ChatMessage&) const = default;
};

struct ActuatorWrite {
  SetupId setup_id;
  std::string channel_id;
  ChannelValue value;
  UserId author;
  TimePoint at{};
};

void to_json(Json& j, const User& v);
void from_json(const Json& j, User& v);
void to_json(Json& j, const Course& v);
void from_json(const Json& j, Course& v);
void to_json(Json& j, const Group& v);
void from_json(const Json& j, Group& v);
void to_json(Json& j, const ChannelDescriptor& v);
void from_json(const Json& j, ChannelDescriptor& v);
void to_json(Json& j, const ImageRecord& v);
void from_json(const Json& j, ImageRecord& v);
void to_json(Json& j, const LabSetup& v);
void from_json(const Json& j, LabSetup& v);
void to_json(Json& j, const TimeSlot& v);
void from_json(const Json& j, TimeSlot& v);
void to_json(Json& j, const Booking& v);
void from_json(const Json& j, Booking& v);
void to_json(Json& j, const SessionRecord& v);
void from_json(const Json& j, SessionRecord& v);
void to_json(Json& j, const ChatMessage& v);
void from_json(const Json& j, ChatMessage& v);
void to_json(Json& j, const ActuatorWrite& v);
void from_json(const Json& j, ActuatorWrite& v);

Json channel_value_to_json(const ChannelValue& v);
ChannelValue channel_value_from_json(const Json& j);

NLOHMANN_JSON_SERIALIZE_ENUM(Role, {{Role::Administrator, "Administrator"},
                                    {Role::Teacher, "Teacher"},
                                    {Role::Student, "Student"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ChannelKind, {{ChannelKind::Sensor, "Sensor"},
                                           {ChannelKind::Actuator, "Actuator"}})
NLOHMANN_JSON_SERIALIZE_ENUM(ChannelDatatype, {{ChannelDatatype::Float, "Float"},
                                               {ChannelDatatype::Bool, "Bool"}})
NLOHMANN_JSON_SERIALIZE_ENUM(BookingState, {{BookingState::Active, "Active"},
                                            {BookingState::Cancelled, "Cancelled"}})
NLOHMANN_JSON_SERIALIZE_ENUM(SessionState, {{SessionState::Starting, "Starting"},
                                            {SessionState::Active, "Active"},
                                            {SessionState::Ending, "Ending"},
                                            {SessionState::Ended, "Ended"}})

}  // namespace rlab
