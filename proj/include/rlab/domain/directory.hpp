#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rlab/domain/permissions.hpp"
#include "rlab/domain/store.hpp"

namespace rlab {

struct DirectoryConfig {
  std::size_t min_group_size = 2;
  std::size_t max_group_size = 5;
  unsigned credential_iterations = 20000;
};

/// Users, courses, groups and lab setups. Every mutation takes the acting
/// user, checks the permission matrix and commits one event.
class Directory {
 public:
  Directory(Store& store, DirectoryConfig config) : store_(store), config_(config) {}

  /// Creates the first administrator. Only allowed while no administrator exists.
  User bootstrap_admin(const std::string& display_name, const std::string& credential);

  User create_user(UserId caller, const std::string& display_name, Role role,
                   const std::string& credential);
  Course create_course(UserId caller, UserId teacher, const std::string& title);
  /// Idempotent: enrolling an enrolled student commits nothing.
  Course enroll_student(UserId caller, CourseId course, UserId student);
  Group create_group(UserId caller, CourseId course, const std::vector<UserId>& members);
  LabSetup register_lab_setup(UserId caller, const std::string& name, const std::string& base_image,
                              const std::vector<ChannelDescriptor>& channels,
                              const std::string& camera_source);
  /// Makes the setup bookable by groups of the course. Idempotent.
  Course link_setup(UserId caller, CourseId course, SetupId setup);

  [[nodiscard]] const DirectoryConfig& config() const { return config_; }

 private:
  Store& store_;
  DirectoryConfig config_;
};

}  // namespace rlab
