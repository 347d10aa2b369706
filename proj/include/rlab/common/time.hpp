#pragma once

#include <atomic>
#include <chrono>
#include <compare>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace rlab {

using TimePoint = std::chrono::sys_seconds;
using Minutes = std::chrono::minutes;

/// ISO-8601 week-numbering year and week (1..53), UTC.
struct IsoWeek {
  int year = 0;
  unsigned week = 0;

  auto operator<=>(const IsoWeek&) const = default;

  /// "2026-W43"
  [[nodiscard]] std::string str() const;
  static IsoWeek parse(std::string_view text);
};

IsoWeek iso_week_of(TimePoint t);
/// Monday 00:00 UTC starting the given ISO week.
TimePoint iso_week_start(IsoWeek w);

/// "2026-10-19T08:00:00Z"
std::string format_iso8601(TimePoint t);
/// Accepts "YYYY-MM-DDTHH:MM[:SS]Z" (the trailing Z is required).
TimePoint parse_iso8601(std::string_view text);

TimePoint make_time(int year, unsigned month, unsigned day, unsigned hour = 0,
                    unsigned minute = 0);

class Clock {
 public:
  virtual ~Clock() = default;
  [[nodiscard]] virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
 public:
  [[nodiscard]] TimePoint now() const override;
};

/// Injectable clock for tests and simulations; never moves on its own.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimePoint start = TimePoint{}) : now_(start.time_since_epoch().count()) {}

  [[nodiscard]] TimePoint now() const override {
    return TimePoint{std::chrono::seconds{now_.load()}};
  }
  void set(TimePoint t) { now_.store(t.time_since_epoch().count()); }
  void advance(std::chrono::seconds d) { now_.fetch_add(d.count()); }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace rlab

namespace nlohmann {
template <>
struct adl_serializer<rlab::TimePoint> {
  static void to_json(json& j, const rlab::TimePoint& t) { j = rlab::format_iso8601(t); }
  static void from_json(const json& j, rlab::TimePoint& t) {
    t = rlab::parse_iso8601(j.get<std::string>());
  }
};
}  // namespace nlohmann
