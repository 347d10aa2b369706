#include "doctest.h"

#include <random>

#include "../support/expect.hpp"
#include "../support/world.hpp"

using namespace rlab;
using rlab::testing::error_of;
using rlab::testing::World;

TEST_CASE("create_user") {
  World w;
  const auto u = w.directory.create_user(w.admin, "bob", Role::Student, "pw");
  CHECK(u.display_name == "bob");
  CHECK(u.role == Role::Student);
  CHECK(u.credential_hash.find("pw") == std::string::npos);

  CHECK(error_of([&] { w.directory.create_user(w.admin, "", Role::Student, "pw"); }) ==
        Errc::InvalidArgument);
  CHECK(error_of([&] { w.directory.create_user(w.admin, "bob", Role::Student, "x"); }) ==
        Errc::DuplicateName);
  // Uniqueness is per role.
  CHECK_NOTHROW(w.directory.create_user(w.admin, "bob", Role::Teacher, "x"));
  CHECK(error_of([&] { w.directory.create_user(w.teacher, "carol", Role::Student, "x"); }) ==
        Errc::PermissionDenied);
  CHECK(error_of([&] { w.directory.bootstrap_admin("root2", "x"); }) == Errc::PermissionDenied);
}

TEST_CASE("create_course") {
  World w;
  const auto bob = w.directory.create_user(w.admin, "bob", Role::Student, "pw").id;
  const auto c = w.directory.create_course(w.teacher, w.teacher, "FPGA Intro");
  CHECK(c.teacher_id == w.teacher);
  CHECK(c.title == "FPGA Intro");
  CHECK(c.student_ids.empty());

  CHECK(error_of([&] { w.directory.create_course(bob, bob, "X"); }) == Errc::PermissionDenied);
  // An admin naming a student as owner is refused as well.
  CHECK(error_of([&] { w.directory.create_course(w.admin, bob, "X"); }) == Errc::PermissionDenied);
  CHECK(error_of([&] { w.directory.create_course(w.admin, UserId{999}, "X"); }) == Errc::NotFound);
  CHECK(error_of([&] { w.directory.create_course(UserId{999}, w.teacher, "X"); }) == Errc::NotFound);

  const auto other = w.directory.create_user(w.admin, "tom", Role::Teacher, "pw").id;
  CHECK(error_of([&] { w.directory.create_course(other, w.teacher, "X"); }) == Errc::PermissionDenied);
  CHECK(w.directory.create_course(w.admin, other, "Y").teacher_id == other);
}

TEST_CASE("enroll_student") {
  World w;
  const auto students = w.add_students(42);
  const auto course = w.directory.create_course(w.teacher, w.teacher, "FPGA Intro").id;
  w.directory.enroll_student(w.teacher, course, students[0]);
  const auto seq_before = w.store->log().last_seq();
  const auto again = w.directory.enroll_student(w.teacher, course, students[0]);
  CHECK(again.student_ids.size() == 1);
  CHECK(w.store->log().last_seq() == seq_before);

  CHECK(error_of([&] { w.directory.enroll_student(w.teacher, course, w.teacher); }) ==
        Errc::PermissionDenied);
  CHECK(error_of([&] { w.directory.enroll_student(w.teacher, CourseId{77}, students[1]); }) ==
        Errc::NotFound);
  CHECK(error_of([&] { w.directory.enroll_student(w.teacher, course, UserId{999}); }) ==
        Errc::NotFound);

  for (const auto s : students) {
    w.directory.enroll_student(w.teacher, course, s);
  }
  CHECK(w.store->read([&](const LabState& st) { return st.courses.at(course).student_ids.size(); }) == 42);
}

TEST_CASE("create_group") {
  World w;
  const auto s = w.add_students(10);
  const auto course = w.add_course(s);

  const auto g = w.directory.create_group(w.teacher, course, {s[0], s[1]});
  CHECK(g.member_ids == std::vector<UserId>{s[0], s[1]});
  CHECK(w.directory.create_group(w.teacher, course, {s[2], s[3], s[4], s[5], s[6]}).member_ids.size() == 5);

  CHECK(error_of([&] {
          w.directory.create_group(w.teacher, course, {s[7], s[8], s[9], s[2], s[3], s[4]});
        }) == Errc::GroupSizeViolation);
  CHECK(error_of([&] { w.directory.create_group(w.teacher, course, {s[7]}); }) ==
        Errc::GroupSizeViolation);
  CHECK(error_of([&] { w.directory.create_group(w.teacher, course, {s[0], s[7]}); }) ==
        Errc::AlreadyGrouped);
  const auto outsider = w.add_students(1, "outsider")[0];
  CHECK(error_of([&] { w.directory.create_group(w.teacher, course, {s[7], outsider}); }) ==
        Errc::NotEnrolled);
  CHECK(error_of([&] { w.directory.create_group(w.teacher, course, {s[7], s[7]}); }) ==
        Errc::InvalidArgument);
  CHECK(error_of([&] { w.directory.create_group(s[7], course, {s[7], s[8]}); }) ==
        Errc::PermissionDenied);

  // The same student may join a group in a second course.
  const auto course2 = w.add_course({s[0], s[7]});
  CHECK_NOTHROW(w.directory.create_group(w.teacher, course2, {s[0], s[7]}));
}

TEST_CASE("register_lab_setup") {
  World w;
  const auto img = w.add_image("vivado.img");
  std::set<SetupId> ids;
  for (int i = 0; i < 3; ++i) {
    ids.insert(w.directory.register_lab_setup(w.admin, "zybo" + std::to_string(i), img, {}, "cam").id);
  }
  CHECK(ids.size() == 3);
  CHECK(error_of([&] { w.directory.register_lab_setup(w.admin, "x", std::string(64, 'f'), {}, "c"); }) ==
        Errc::UnknownImage);
  CHECK(error_of([&] { w.directory.register_lab_setup(w.teacher, "x", img, {}, "c"); }) ==
        Errc::PermissionDenied);
  const ChannelDescriptor bad{"t", ChannelKind::Sensor, ChannelDatatype::Float, "C", 10, 0};
  CHECK(error_of([&] { w.directory.register_lab_setup(w.admin, "x", img, {bad}, "c"); }) ==
        Errc::InvalidArgument);
}

TEST_CASE("group invariants and referential integrity hold under random mutation sequences") {
  std::mt19937 rng(1234);
  for (int round = 0; round < 5; ++round) {
    World w;
    const auto students = w.add_students(20);
    std::vector<CourseId> courses{w.add_course({}), w.add_course({})};
    for (int step = 0; step < 150; ++step) {
      const auto course = courses[rng() % courses.size()];
      switch (rng() % 3) {
        case 0:
          (void)error_of([&] { w.directory.enroll_student(w.teacher, course, students[rng() % students.size()]); });
          break;
        case 1: {
          std::vector<UserId> members;
          const auto n = 1 + rng() % 6;
          for (std::size_t i = 0; i < n; ++i) members.push_back(students[rng() % students.size()]);
          (void)error_of([&] { w.directory.create_group(w.teacher, course, members); });
          break;
        }
        default:
          (void)error_of([&] { w.directory.enroll_student(w.teacher, course, w.teacher); });
      }
    }
    w.store->read([&](const LabState& s) {
      std::set<std::pair<CourseId, UserId>> grouped;
      for (const auto& [id, g] : s.groups) {
        CHECK(g.member_ids.size() >= 2);
        CHECK(g.member_ids.size() <= 5);
        const auto& c = s.courses.at(g.course_id);
        for (const auto m : g.member_ids) {
          CHECK(c.student_ids.contains(m));
          CHECK(s.users.at(m).role == Role::Student);
          CHECK(grouped.insert({g.course_id, m}).second);
        }
      }
      for (const auto& [id, c] : s.courses) {
        CHECK(s.users.at(c.teacher_id).role == Role::Teacher);
        for (const auto st : c.student_ids) CHECK(s.users.at(st).role == Role::Student);
      }
      return 0;
    });
  }
}

TEST_CASE("replaying the log reproduces the live state") {
  World w;
  const auto s = w.add_students(4);
  const auto course = w.add_course(s);
  w.directory.create_group(w.teacher, course, {s[0], s[1]});
  w.add_setup(course);

  const auto live = w.store->copy_state().canonical();
  const auto replayed = persistence::replay<LabState>(std::nullopt, w.store->log().events());
  CHECK(replayed.canonical() == live);

  const auto snap = w.store->take_snapshot();
  w.directory.create_group(w.teacher, course, {s[2], s[3]});
  const auto from_snap = persistence::replay<LabState>(snap, w.store->log().events());
  CHECK(from_snap.canonical() == w.store->copy_state().canonical());
  // Snapshot with no newer events is the identity.
  const auto snap2 = w.store->take_snapshot();
  CHECK(snap2.as_of_seq >= snap.as_of_seq);
  CHECK(LabState::from_json(snap2.state).canonical() == w.store->copy_state().canonical());
}
