#pragma once

#include <span>
#include <string_view>
#include <variant>

#include "rlab/domain/state.hpp"

namespace rlab {

struct Caller {
  UserId id;
  Role role = Role::Student;
};

enum class Action {
  CreateUser,
  CreateCourse,
  EnrollStudent,
  CreateGroup,
  RegisterImage,
  RegisterSetup,
  LinkSetup,
  GenerateSlots,
  BookSlot,
  CancelBooking,
  ViewQuota,
  ListSlots,
  StartSession,
  JoinSession,
  EndSession,
  PostChat,
  ReadChat,
  ListChannels,
  ReadSensor,
  WriteActuator,
  ViewPool,
  TakeSnapshot,
  RunSweep,
};

/// Deny: never. Owner: only when the caller owns the resource (a teacher owns
/// everything under their courses; a student owns what belongs to their
/// groups). Any: unconditionally.
enum class Scope { Deny, Owner, Any };

struct PermissionRule {
  Action action;
  std::string_view name;
  bool mutating;
  Scope administrator;
  Scope teacher;
  Scope student;
};

/// The complete role x operation table.
std::span<const PermissionRule> permission_matrix();
const PermissionRule& rule_for(Action action);
std::string_view to_string(Action action);

using Resource = std::variant<std::monostate, CourseId, GroupId, SetupId, SlotId, BookingId, SessionId>;

enum class Decision { Allow, Deny };

/// Pure decision. Throws Error(NotFound) if the resource does not exist,
/// since ownership cannot be evaluated.
Decision decide(const LabState& state, const Caller& caller, Action action, const Resource& resource);

/// Throws Error(PermissionDenied) on Deny.
void require_permission(const LabState& state, const Caller& caller, Action action,
                        const Resource& resource = std::monostate{});

/// Caller as registered in state; throws NotFound for unknown users.
Caller caller_of(const LabState& state, UserId id);

}  // namespace rlab
