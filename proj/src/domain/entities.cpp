#include "rlab/domain/entities.hpp"

#include <algorithm>

#include "rlab/common/error.hpp"

namespace rlab {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Administrator: return "Administrator";
    case Role::Teacher: return "Teacher";
    case Role::Student: return "Student";
  }
  return "Unknown";
}

Role parse_role(std::string_view text) {
  for (const Role r : {Role::Administrator, Role::Teacher, Role::Student}) {
    if (text == to_string(r)) {
      return r;
    }
  }
  throw Error(Errc::InvalidArgument, "unknown role: " + std::string(text));
}

std::string_view to_string(SessionState state) noexcept {
  switch (state) {
    case SessionState::Starting: return "Starting";
    case SessionState::Active: return "Active";
    case SessionState::Ending: return "Ending";
    case SessionState::Ended: return "Ended";
  }
  return "Unknown";
}

bool Group::has_member(UserId user) const {
  return std::find(member_ids.begin(), member_ids.end(), user) != member_ids.end();
}

const ChannelDescriptor* LabSetup::find_channel(std::string_view channel_id) const {
  for (const auto& c : hardware_channels) {
    if (c.channel_id == channel_id) {
      return &c;
    }
  }
  return nullptr;
}

Json channel_value_to_json(const ChannelValue& v) {
  return std::visit([](auto x) { return Json(x); }, v);
}

ChannelValue channel_value_from_json(const Json& j) {
  if (j.is_boolean()) {
    return j.get<bool>();
  }
  if (j.is_number()) {
    return j.get<double>();
  }
  throw Error(Errc::InvalidArgument, "channel value must be a number or boolean");
}

void to_json(Json& j, const User& v) {
  j = Json{{"id", v.id},
           {"display_name", v.display_name},
           {"role", v.role},
           {"credential_hash", v.credential_hash}};
}

void from_json(const Json& j, User& v) {
  v.id = j.at("id").get<UserId>();
  v.display_name = j.at("display_name").get<std::string>();
  v.role = parse_role(j.at("role").get<std::string>());
  v.credential_hash = j.at("credential_hash").get<std::string>();
}

void to_json(Json& j, const Course& v) {
  j = Json{{"id", v.id},
           {"title", v.title},
           {"teacher_id", v.teacher_id},
           {"student_ids", v.student_ids},
           {"setup_ids", v.setup_ids}};
}

void from_json(const Json& j, Course& v) {
  v.id = j.at("id").get<CourseId>();
  v.title = j.at("title").get<std::string>();
  v.teacher_id = j.at("teacher_id").get<UserId>();
  v.student_ids = j.at("student_ids").get<std::set<UserId>>();
  v.setup_ids = j.at("setup_ids").get<std::set<SetupId>>();
}

void to_json(Json& j, const Group& v) {
  j = Json{{"id", v.id}, {"course_id", v.course_id}, {"member_ids", v.member_ids}};
}

void from_json(const Json& j, Group& v) {
  v.id = j.at("id").get<GroupId>();
  v.course_id = j.at("course_id").get<CourseId>();
  v.member_ids = j.at("member_ids").get<std::vector<UserId>>();
}

void to_json(Json& j, const ChannelDescriptor& v) {
  j = Json{{"channel_id", v.channel_id}, {"kind", v.kind}, {"datatype", v.datatype},
           {"unit", v.unit},             {"min", v.min},   {"max", v.max}};
}

void from_json(const Json& j, ChannelDescriptor& v) {
  v.channel_id = j.at("channel_id").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "Sensor" && kind != "Actuator") {
    throw Error(Errc::InvalidArgument, "unknown channel kind: " + kind);
  }
  v.kind = kind == "Sensor" ? ChannelKind::Sensor : ChannelKind::Actuator;
  const auto type = j.at("datatype").get<std::string>();
  if (type != "Float" && type != "Bool") {
    throw Error(Errc::InvalidArgument, "unknown channel datatype: " + type);
  }
  v.datatype = type == "Float" ? ChannelDatatype::Float : ChannelDatatype::Bool;
  v.unit = j.value("unit", "");
  v.min = j.value("min", 0.0);
  v.max = j.value("max", 0.0);
}

void to_json(Json& j, const ImageRecord& v) {
  j = Json{{"digest", v.digest}, {"label", v.label}, {"size", v.size}};
}

void from_json(const Json& j, ImageRecord& v) {
  v.digest = j.at("digest").get<std::string>();
  v.label = j.at("label").get<std::string>();
  v.size = j.at("size").get<std::uint64_t>();
}

void to_json(Json& j, const LabSetup& v) {
  j = Json{{"id", v.id},
           {"name", v.name},
           {"base_image", v.base_image},
           {"hardware_channels", v.hardware_channels},
           {"camera_source", v.camera_source},
           {"enabled", v.enabled}};
}

void from_json(const Json& j, LabSetup& v) {
  v.id = j.at("id").get<SetupId>();
  v.name = j.at("name").get<std::string>();
  v.base_image = j.at("base_image").get<std::string>();
  v.hardware_channels = j.at("hardware_channels").get<std::vector<ChannelDescriptor>>();
  v.camera_source = j.at("camera_source").get<std::string>();
  v.enabled = j.at("enabled").get<bool>();
}

void to_json(Json& j, const TimeSlot& v) {
  j = Json{{"id", v.id},
           {"setup_id", v.setup_id},
           {"start", v.start},
           {"duration_minutes", v.duration.count()}};
}

void from_json(const Json& j, TimeSlot& v) {
  v.id = j.at("id").get<SlotId>();
  v.setup_id = j.at("setup_id").get<SetupId>();
  v.start = j.at("start").get<TimePoint>();
  v.duration = Minutes{j.at("duration_minutes").get<std::int64_t>()};
}

void to_json(Json& j, const Booking& v) {
  j = Json{{"id", v.id},
           {"slot_id", v.slot_id},
           {"group_id", v.group_id},
           {"created_at", v.created_at},
           {"state", v.state}};
}

void from_json(const Json& j, Booking& v) {
  v.id = j.at("id").get<BookingId>();
  v.slot_id = j.at("slot_id").get<SlotId>();
  v.group_id = j.at("group_id").get<GroupId>();
  v.created_at = j.at("created_at").get<TimePoint>();
  v.state = j.at("state").get<std::string>() == "Cancelled" ? BookingState::Cancelled
                                                            : BookingState::Active;
}

void to_json(Json& j, const SessionRecord& v) {
  j = Json{{"id", v.id},
           {"booking_id", v.booking_id},
           {"vm_id", v.vm_id},
           {"conference_room", v.conference_room},
           {"state", v.state},
           {"participants", v.participants},
           {"started_at", v.started_at},
           {"ended_at", v.ended_at ? Json(*v.ended_at) : Json(nullptr)},
           {"end_reason", v.end_reason}};
}

void from_json(const Json& j, SessionRecord& v) {
  v.id = j.at("id").get<SessionId>();
  v.booking_id = j.at("booking_id").get<BookingId>();
  v.vm_id = j.at("vm_id").get<VmId>();
  v.conference_room = j.at("conference_room").get<std::string>();
  j.at("state").get_to(v.state);
  v.participants = j.at("participants").get<std::set<UserId>>();
  v.started_at = j.at("started_at").get<TimePoint>();
  if (const auto& e = j.at("ended_at"); !e.is_null()) {
    v.ended_at = e.get<TimePoint>();
  }
  v.end_reason = j.at("end_reason").get<std::string>();
}

void to_json(Json& j, const ChatMessage& v) {
  j = Json{{"id", v.id},     {"group_id", v.group_id}, {"author", v.author},
           {"body", v.body}, {"at", v.at},             {"seq", v.seq}};
}

void from_json(const Json& j, ChatMessage& v) {
  v.id = j.at("id").get<ChatMessageId>();
  v.group_id = j.at("group_id").get<GroupId>();
  v.author = j.at("author").get<UserId>();
  v.body = j.at("body").get<std::string>();
  v.at = j.at("at").get<TimePoint>();
  v.seq = j.at("seq").get<std::uint64_t>();
}

void to_json(Json& j, const ActuatorWrite& v) {
  j = Json{{"setup_id", v.setup_id},
           {"channel_id", v.channel_id},
           {"value", channel_value_to_json(v.value)},
           {"author", v.author},
           {"at", v.at}};
}

void from_json(const Json& j, ActuatorWrite& v) {
  v.setup_id = j.at("setup_id").get<SetupId>();
  v.channel_id = j.at("channel_id").get<std::string>();
  v.value = channel_value_from_json(j.at("value"));
  v.author = j.at("author").get<UserId>();
  v.at = j.at("at").get<TimePoint>();
}

}  // namespace rlab
