#include "doctest.h"

#include "rlab/common/crypto.hpp"
#include "rlab/common/error.hpp"
#include "rlab/common/time.hpp"

using namespace rlab;

TEST_CASE("iso week boundaries") {
  // 2021-01-03 is a Sunday still belonging to the last week of 2020.
  CHECK(iso_week_of(make_time(2021, 1, 3, 23, 59)) == IsoWeek{2020, 53});
  CHECK(iso_week_of(make_time(2021, 1, 4)) == IsoWeek{2021, 1});
  // 2024-12-30 (Monday) starts week 1 of 2025.
  CHECK(iso_week_of(make_time(2024, 12, 30)) == IsoWeek{2025, 1});
  CHECK(iso_week_of(make_time(2026, 10, 19, 8)) == IsoWeek{2026, 43});
  CHECK(iso_week_of(make_time(2026, 10, 25, 23, 59)) == IsoWeek{2026, 43});
  CHECK(iso_week_of(make_time(2026, 10, 26)) == IsoWeek{2026, 44});
}

TEST_CASE("iso week start and parse round trip across years") {
  for (int year = 2015; year <= 2030; ++year) {
    for (unsigned week = 1; week <= 52; ++week) {
      const IsoWeek w{year, week};
      CHECK(iso_week_of(iso_week_start(w)) == w);
      CHECK(IsoWeek::parse(w.str()) == w);
    }
  }
  CHECK(IsoWeek::parse("2020-W53") == IsoWeek{2020, 53});
  CHECK_THROWS_AS(IsoWeek::parse("2021-W53"), Error);
  CHECK_THROWS_AS(IsoWeek::parse("2021W01"), Error);
}

TEST_CASE("iso8601 timestamps") {
  const auto t = make_time(2026, 10, 19, 8, 30);
  CHECK(format_iso8601(t) == "2026-10-19T08:30:00Z");
  CHECK(parse_iso8601("2026-10-19T08:30:00Z") == t);
  CHECK(parse_iso8601("2026-10-19T08:30Z") == t);
  CHECK_THROWS_AS(parse_iso8601("2026-10-19 08:30:00"), Error);
  CHECK_THROWS_AS(parse_iso8601("2026-02-30T08:30:00Z"), Error);
  CHECK_THROWS_AS(parse_iso8601("2026-10-19T08:30:00+02:00"), Error);
}

TEST_CASE("sha256 known vectors") {
  CHECK(crypto::to_hex(crypto::sha256("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(crypto::to_hex(crypto::sha256("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("credential hashing is salted and verifiable") {
  const auto a = crypto::hash_credential("pw", 1000);
  const auto b = crypto::hash_credential("pw", 1000);
  CHECK(a != b);
  CHECK(a.find("pw") == std::string::npos);
  CHECK(crypto::verify_credential("pw", a));
  CHECK(crypto::verify_credential("pw", b));
  CHECK_FALSE(crypto::verify_credential("pW", a));
  CHECK_FALSE(crypto::verify_credential("pw", "garbage"));
  CHECK(crypto::random_token().size() == 64);
  CHECK(crypto::random_token() != crypto::random_token());
}
