#include "rlab/platform/demo.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "rlab/common/error.hpp"

namespace rlab {

std::vector<int> demo_group_sizes(int students, int groups, std::uint64_t seed) {
  if (groups <= 0 || students < 2 * groups || students > 5 * groups) {
    throw Error(Errc::InvalidArgument, "students cannot be split into groups of 2 to 5");
  }
  std::vector<int> sizes(static_cast<std::size_t>(groups), 2);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, sizes.size() - 1);
  for (int extra = students - 2 * groups; extra > 0;) {
    auto& s = sizes[pick(rng)];
    if (s < 5) {
      ++s;
      --extra;
    }
  }
  return sizes;
}

namespace {

std::string numbered(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return prefix + buf;
}

std::vector<ChannelDescriptor> demo_channels() {
  return {
      {"temp", ChannelKind::Sensor, ChannelDatatype::Float, "degC", 15.0, 35.0},
      {"button", ChannelKind::Sensor, ChannelDatatype::Bool, "", 0.0, 0.0},
      {"relay", ChannelKind::Actuator, ChannelDatatype::Bool, "", 0.0, 0.0},
      {"fan", ChannelKind::Actuator, ChannelDatatype::Float, "%", 0.0, 100.0},
  };
}

}  // namespace

DemoData seed_demo(Platform& p, UserId admin, const DemoOptions& o) {
  DemoData d;
  d.admin = admin;
  d.teacher = p.directory.create_user(admin, "teacher", Role::Teacher, o.credential_prefix + "teacher").id;
  for (int i = 1; i <= o.students; ++i) {
    d.students.push_back(
        p.directory.create_user(admin, numbered("student", i), Role::Student, numbered(o.credential_prefix, i)).id);
  }
  d.course = p.directory.create_course(admin, d.teacher, "Embedded Systems Lab").id;
  for (auto s : d.students) p.directory.enroll_student(d.teacher, d.course, s);

  auto order = d.students;
  std::mt19937_64 rng(o.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t next = 0;
  for (int size : demo_group_sizes(o.students, o.groups, o.seed)) {
    std::vector<UserId> members(order.begin() + static_cast<std::ptrdiff_t>(next),
                                order.begin() + static_cast<std::ptrdiff_t>(next + static_cast<std::size_t>(size)));
    next += static_cast<std::size_t>(size);
    d.groups.push_back(p.directory.create_group(d.teacher, d.course, members).id);
  }

  for (int i = 1; i <= o.setups; ++i) {
    const std::string content = "zybo base image " + std::to_string(i);
    const auto image = p.pool.register_image(
        admin, numbered("zybo-", i) + ".img",
        std::span(reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
    const auto setup =
        p.directory.register_lab_setup(admin, numbered("zybo-", i), image.digest, demo_channels(), numbered("cam-", i)).id;
    p.directory.link_setup(admin, d.course, setup);
    d.setups.push_back(setup);
    for (int day = 0; day < o.days; ++day) {
      const auto day_start = o.week_start + std::chrono::days{day};
      auto slots = p.scheduler.generate_slots(d.teacher, setup, day_start + std::chrono::hours{o.first_hour},
                                              day_start + std::chrono::hours{o.last_hour}, o.slot_length);
      d.slots.insert(d.slots.end(), slots.begin(), slots.end());
    }
  }
  return d;
}

}  // namespace rlab
