#include "rlab/domain/directory.hpp"

#include <algorithm>
#include <set>

#include "rlab/common/crypto.hpp"
#include "rlab/common/error.hpp"

namespace rlab {

namespace {

void require_non_empty(const std::string& value, const char* what) {
  if (value.empty()) {
    throw Error(Errc::InvalidArgument, std::string(what) + " must not be empty");
  }
}

void validate_channels(const std::vector<ChannelDescriptor>& channels) {
  std::set<std::string> ids;
  for (const auto& c : channels) {
    require_non_empty(c.channel_id, "channel id");
    if (!ids.insert(c.channel_id).second) {
      throw Error(Errc::InvalidArgument, "duplicate channel id " + c.channel_id);
    }
    if (c.datatype == ChannelDatatype::Float && !(c.min <= c.max)) {
      throw Error(Errc::InvalidArgument, "channel " + c.channel_id + " has min > max");
    }
  }
}

}  // namespace

User Directory::bootstrap_admin(const std::string& display_name, const std::string& credential) {
  require_non_empty(display_name, "display_name");
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    for (const auto& [id, u] : s.users) {
      if (u.role == Role::Administrator) {
        throw Error(Errc::PermissionDenied, "an administrator already exists");
      }
    }
    User user{s.next_user_id(), display_name, Role::Administrator,
              crypto::hash_credential(credential, config_.credential_iterations)};
    tx.commit(event_kind::kUserCreated, user);
    return user;
  });
}

User Directory::create_user(UserId caller, const std::string& display_name, Role role,
                            const std::string& credential) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    require_permission(s, caller_of(s, caller), Action::CreateUser);
    require_non_empty(display_name, "display_name");
    if (s.find_user_by_name(display_name, role) != nullptr) {
      throw Error(Errc::DuplicateName,
                  std::string(to_string(role)) + " named '" + display_name + "' already exists");
    }
    User user{s.next_user_id(), display_name, role,
              crypto::hash_credential(credential, config_.credential_iterations)};
    tx.commit(event_kind::kUserCreated, user);
    return user;
  });
}

Course Directory::create_course(UserId caller, UserId teacher, const std::string& title) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    const Caller actor = caller_of(s, caller);
    require_permission(s, actor, Action::CreateCourse);
    const auto& owner = s.require_user(teacher);
    if (owner.role != Role::Teacher) {
      throw Error(Errc::PermissionDenied, "course owner " + teacher.str() + " is not a Teacher");
    }
    if (actor.role == Role::Teacher && actor.id != teacher) {
      throw Error(Errc::PermissionDenied, "teachers may only create their own courses");
    }
    require_non_empty(title, "title");
    Course course{s.next_course_id(), title, teacher, {}, {}};
    tx.commit(event_kind::kCourseCreated, course);
    return course;
  });
}

Course Directory::enroll_student(UserId caller, CourseId course, UserId student) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    (void)s.require_course(course);
    require_permission(s, caller_of(s, caller), Action::EnrollStudent, course);
    if (s.require_user(student).role != Role::Student) {
      throw Error(Errc::PermissionDenied, "user " + student.str() + " is not a Student");
    }
    if (!s.courses.at(course).student_ids.contains(student)) {
      tx.commit(event_kind::kStudentEnrolled, Json{{"course_id", course}, {"student_id", student}});
    }
    return s.courses.at(course);
  });
}

Group Directory::create_group(UserId caller, CourseId course, const std::vector<UserId>& members) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    const auto& c = s.require_course(course);
    require_permission(s, caller_of(s, caller), Action::CreateGroup, course);
    if (std::set<UserId>(members.begin(), members.end()).size() != members.size()) {
      throw Error(Errc::InvalidArgument, "group members must be distinct");
    }
    if (members.size() < config_.min_group_size || members.size() > config_.max_group_size) {
      throw Error(Errc::GroupSizeViolation,
                  "group size " + std::to_string(members.size()) + " outside [" +
                      std::to_string(config_.min_group_size) + ", " +
                      std::to_string(config_.max_group_size) + "]");
    }
    for (const UserId m : members) {
      (void)s.require_user(m);
      if (!c.student_ids.contains(m)) {
        throw Error(Errc::NotEnrolled, "user " + m.str() + " is not enrolled in course " + course.str());
      }
      if (s.group_of(course, m)) {
        throw Error(Errc::AlreadyGrouped, "user " + m.str() + " already has a group in course " + course.str());
      }
    }
    Group group{s.next_group_id(), course, members};
    tx.commit(event_kind::kGroupCreated, group);
    return group;
  });
}

LabSetup Directory::register_lab_setup(UserId caller, const std::string& name,
                                       const std::string& base_image,
                                       const std::vector<ChannelDescriptor>& channels,
                                       const std::string& camera_source) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    require_permission(s, caller_of(s, caller), Action::RegisterSetup);
    require_non_empty(name, "name");
    if (!s.images.contains(base_image)) {
      throw Error(Errc::UnknownImage, "image " + base_image + " is not registered");
    }
    validate_channels(channels);
    LabSetup setup{s.next_setup_id(), name, base_image, channels, camera_source, true};
    tx.commit(event_kind::kSetupRegistered, setup);
    return setup;
  });
}

Course Directory::link_setup(UserId caller, CourseId course, SetupId setup) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    (void)s.require_course(course);
    (void)s.require_setup(setup);
    require_permission(s, caller_of(s, caller), Action::LinkSetup, course);
    if (!s.setup_linked_to_course(setup, course)) {
      tx.commit(event_kind::kSetupLinked, Json{{"course_id", course}, {"setup_id", setup}});
    }
    return s.courses.at(course);
  });
}

}  // namespace rlab
