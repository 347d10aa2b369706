#include "rlab/domain/permissions.hpp"

#include <array>

#include "rlab/common/error.hpp"

namespace rlab {

namespace {

constexpr Scope D = Scope::Deny;
constexpr Scope O = Scope::Owner;
constexpr Scope A = Scope::Any;

// clang-format off
constexpr std::array kMatrix{
    //              action                  name              mutating admin teacher student
    PermissionRule{Action::CreateUser,    "create_user",        true,  A, D, D},
    PermissionRule{Action::CreateCourse,  "create_course",      true,  A, A, D},
    PermissionRule{Action::EnrollStudent, "enroll_student",     true,  A, O, D},
    PermissionRule{Action::CreateGroup,   "create_group",       true,  A, O, D},
    PermissionRule{Action::RegisterImage, "register_image",     true,  A, D, D},
    PermissionRule{Action::RegisterSetup, "register_lab_setup", true,  A, D, D},
    PermissionRule{Action::LinkSetup,     "link_setup",         true,  A, O, D},
    PermissionRule{Action::GenerateSlots, "generate_slots",     true,  A, O, D},
    PermissionRule{Action::BookSlot,      "book_slot",          true,  A, D, O},
    PermissionRule{Action::CancelBooking, "cancel_booking",     true,  A, O, O},
    PermissionRule{Action::ViewQuota,     "quota_remaining",    false, A, O, O},
    PermissionRule{Action::ListSlots,     "list_available",     false, A, A, A},
    PermissionRule{Action::StartSession,  "start_session",      true,  A, O, O},
    PermissionRule{Action::JoinSession,   "join_session",       true,  A, O, O},
    PermissionRule{Action::EndSession,    "end_session",        true,  A, O, O},
    PermissionRule{Action::PostChat,      "post_message",       true,  A, O, O},
    PermissionRule{Action::ReadChat,      "chat_history",       false, A, O, O},
    PermissionRule{Action::ListChannels,  "list_channels",      false, A, A, A},
    PermissionRule{Action::ReadSensor,    "read_sensor",        false, A, O, O},
    PermissionRule{Action::WriteActuator, "set_actuator",       true,  A, O, O},
    PermissionRule{Action::ViewPool,      "pool_status",        false, A, D, D},
    PermissionRule{Action::TakeSnapshot,  "take_snapshot",      true,  A, D, D},
    PermissionRule{Action::RunSweep,      "scheduled_sweep",    true,  A, D, D},
};
// clang-format on

CourseId course_of(const LabState& s, GroupId g) { return s.require_group(g).course_id; }

GroupId group_of_booking(const LabState& s, BookingId b) { return s.require_booking(b).group_id; }

GroupId group_of_session(const LabState& s, SessionId id) {
  return group_of_booking(s, s.require_session(id).booking_id);
}

bool teacher_owns_setup(const LabState& s, UserId teacher, SetupId setup) {
  (void)s.require_setup(setup);
  for (const auto& [id, c] : s.courses) {
    if (c.teacher_id == teacher && c.setup_ids.contains(setup)) {
      return true;
    }
  }
  return false;
}

bool teacher_owns(const LabState& s, UserId teacher, const Resource& r) {
  auto owns_course = [&](CourseId c) { return s.require_course(c).teacher_id == teacher; };
  return std::visit(
      [&](const auto& id) -> bool {
        using T = std::decay_t<decltype(id)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return false;
        } else if constexpr (std::is_same_v<T, CourseId>) {
          return owns_course(id);
        } else if constexpr (std::is_same_v<T, GroupId>) {
          return owns_course(course_of(s, id));
        } else if constexpr (std::is_same_v<T, SetupId>) {
          return teacher_owns_setup(s, teacher, id);
        } else if constexpr (std::is_same_v<T, SlotId>) {
          return teacher_owns_setup(s, teacher, s.require_slot(id).setup_id);
        } else if constexpr (std::is_same_v<T, BookingId>) {
          return owns_course(course_of(s, group_of_booking(s, id)));
        } else {
          return owns_course(course_of(s, group_of_session(s, id)));
        }
      },
      r);
}

bool student_owns(const LabState& s, UserId student, const Resource& r) {
  auto member = [&](GroupId g) { return s.require_group(g).has_member(student); };
  return std::visit(
      [&](const auto& id) -> bool {
        using T = std::decay_t<decltype(id)>;
        if constexpr (std::is_same_v<T, CourseId>) {
          return s.require_course(id).student_ids.contains(student);
        } else if constexpr (std::is_same_v<T, GroupId>) {
          return member(id);
        } else if constexpr (std::is_same_v<T, BookingId>) {
          return member(group_of_booking(s, id));
        } else if constexpr (std::is_same_v<T, SessionId>) {
          return member(group_of_session(s, id));
        } else {
          // Students own no setups, slots or unscoped resources.
          return false;
        }
      },
      r);
}

}  // namespace

std::span<const PermissionRule> permission_matrix() { return kMatrix; }

const PermissionRule& rule_for(Action action) {
  for (const auto& rule : kMatrix) {
    if (rule.action == action) {
      return rule;
    }
  }
  throw Error(Errc::InvalidArgument, "action missing from permission matrix");
}

std::string_view to_string(Action action) { return rule_for(action).name; }

Decision decide(const LabState& state, const Caller& caller, Action action, const Resource& resource) {
  const auto& rule = rule_for(action);
  Scope scope = Scope::Deny;
  switch (caller.role) {
    case Role::Administrator: scope = rule.administrator; break;
    case Role::Teacher: scope = rule.teacher; break;
    case Role::Student: scope = rule.student; break;
  }
  switch (scope) {
    case Scope::Any: return Decision::Allow;
    case Scope::Deny: return Decision::Deny;
    case Scope::Owner:
      if (caller.role == Role::Teacher) {
        return teacher_owns(state, caller.id, resource) ? Decision::Allow : Decision::Deny;
      }
      if (caller.role == Role::Student) {
        return student_owns(state, caller.id, resource) ? Decision::Allow : Decision::Deny;
      }
      return Decision::Allow;
  }
  return Decision::Deny;
}

void require_permission(const LabState& state, const Caller& caller, Action action,
                        const Resource& resource) {
  if (decide(state, caller, action, resource) == Decision::Deny) {
    throw Error(Errc::PermissionDenied, std::string(to_string(caller.role)) + " " +
                                            caller.id.str() + " may not " +
                                            std::string(to_string(action)));
  }
}

Caller caller_of(const LabState& state, UserId id) {
  const auto& user = state.require_user(id);
  return Caller{user.id, user.role};
}

}  // namespace rlab
