#pragma once

#include <string>
#include <vector>

#include "rlab/platform/platform.hpp"

namespace rlab {

struct DemoOptions {
  int students = 42;
  int groups = 20;
  int setups = 3;
  std::uint64_t seed = 42;
  /// Monday of the week that receives slots.
  TimePoint week_start{};
  int first_hour = 8;
  int last_hour = 18;
  int days = 5;
  Minutes slot_length{60};
  /// Student i logs in as "student<NN>" with credential "<prefix><NN>".
  std::string credential_prefix = "pw-";
};

struct DemoData {
  UserId admin;
  UserId teacher;
  std::vector<UserId> students;
  CourseId course;
  std::vector<GroupId> groups;
  std::vector<SetupId> setups;
  std::vector<TimeSlot> slots;
};

/// Sizes in [2, 5] adding up to `students`, shuffled by seed.
std::vector<int> demo_group_sizes(int students, int groups, std::uint64_t seed);

/// One teacher, one course, the students partitioned into groups, and the
/// setups (all linked to the course) with slots for one week. `admin` acts.
DemoData seed_demo(Platform& platform, UserId admin, const DemoOptions& options);

}  // namespace rlab
