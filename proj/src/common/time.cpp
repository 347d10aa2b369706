#include "rlab/common/time.hpp"

#include <charconv>
#include <cstdio>

#include "rlab/common/error.hpp"

namespace rlab {

using namespace std::chrono;

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) {
    throw Error(Errc::InvalidArgument, "timestamp too short: " + std::string(text));
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc{} || ptr != text.data() + pos + len) {
    throw Error(Errc::InvalidArgument, "malformed timestamp: " + std::string(text));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error(Errc::InvalidArgument, "malformed timestamp: " + std::string(text));
  }
}

}  // namespace

std::string IsoWeek::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-W%02u", year, week);
  return buf;
}

IsoWeek IsoWeek::parse(std::string_view text) {
  if (text.size() != 8) {
    throw Error(Errc::InvalidArgument, "expected YYYY-Www, got " + std::string(text));
  }
  expect_char(text, 4, '-');
  expect_char(text, 5, 'W');
  IsoWeek w{parse_int(text, 0, 4), static_cast<unsigned>(parse_int(text, 6, 2))};
  if (w.week < 1 || w.week > 53 || iso_week_of(iso_week_start(w)) != w) {
    throw Error(Errc::InvalidArgument, "no such ISO week: " + std::string(text));
  }
  return w;
}

IsoWeek iso_week_of(TimePoint t) {
  const sys_days day = floor<days>(t);
  const unsigned dow = weekday{day}.iso_encoding();  // Mon=1 .. Sun=7
  const sys_days thursday = day - days{dow - 1} + days{3};
  const year y = year_month_day{thursday}.year();
  const sys_days jan1 = sys_days{y / January / 1};
  return IsoWeek{static_cast<int>(y), static_cast<unsigned>((thursday - jan1).count() / 7 + 1)};
}

TimePoint iso_week_start(IsoWeek w) {
  // Jan 4th always lies in week 1.
  const sys_days jan4 = sys_days{year{w.year} / January / 4};
  const unsigned dow = weekday{jan4}.iso_encoding();
  const sys_days week1_monday = jan4 - days{dow - 1};
  return TimePoint{week1_monday + weeks{w.week - 1}};
}

std::string format_iso8601(TimePoint t) {
  const sys_days day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss<seconds> hms{t - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

TimePoint parse_iso8601(std::string_view text) {
  const int y = parse_int(text, 0, 4);
  expect_char(text, 4, '-');
  const int mo = parse_int(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = parse_int(text, 8, 2);
  expect_char(text, 10, 'T');
  const int h = parse_int(text, 11, 2);
  expect_char(text, 13, ':');
  const int mi = parse_int(text, 14, 2);
  int s = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    s = parse_int(text, 17, 2);
    pos = 19;
  }
  expect_char(text, pos, 'Z');
  if (pos + 1 != text.size()) {
    throw Error(Errc::InvalidArgument, "trailing data in timestamp: " + std::string(text));
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(Errc::InvalidArgument, "timestamp out of range: " + std::string(text));
  }
  return TimePoint{sys_days{ymd} + hours{h} + minutes{mi} + seconds{s}};
}

TimePoint make_time(int y, unsigned mo, unsigned d, unsigned h, unsigned mi) {
  return TimePoint{sys_days{year{y} / month{mo} / day{d}} + hours{h} + minutes{mi}};
}

TimePoint SystemClock::now() const { return floor<seconds>(system_clock::now()); }

}  // namespace rlab
