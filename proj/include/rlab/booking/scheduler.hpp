#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "rlab/domain/permissions.hpp"
#include "rlab/domain/store.hpp"

namespace rlab::booking {

enum class QuotaScope {
  Global,    // one budget per group across all setups
  PerSetup,  // separate budget per group and setup
};

struct QuotaPolicy {
  /// nullopt means Unlimited. When bounded it must be >= 1.
  std::optional<std::uint32_t> max_slots_per_group_per_week;
  QuotaScope scope = QuotaScope::Global;

  static QuotaPolicy unlimited() { return {}; }
  static QuotaPolicy per_week(std::uint32_t max, QuotaScope scope = QuotaScope::Global);
};

/// Active bookings of `group` whose slot starts in `week`; limited to one
/// setup when `setup` is given.
std::uint32_t count_active_in_week(const LabState& state, GroupId group, IsoWeek week,
                                   std::optional<SetupId> setup = std::nullopt);

/// A rule a booking must satisfy besides slot availability. check() throws
/// the rule's error when the booking would violate it.
class BookingRestriction {
 public:
  virtual ~BookingRestriction() = default;
  virtual void check(const LabState& state, const Group& group, const TimeSlot& slot) const = 0;
};

class WeeklyQuota final : public BookingRestriction {
 public:
  explicit WeeklyQuota(QuotaPolicy policy) : policy_(policy) {}
  void check(const LabState& state, const Group& group, const TimeSlot& slot) const override;

 private:
  QuotaPolicy policy_;
};

struct SlotAvailability {
  TimeSlot slot;
  bool available = false;
};

class Scheduler {
 public:
  Scheduler(Store& store, QuotaPolicy policy);

  void add_restriction(std::unique_ptr<BookingRestriction> restriction);

  /// Back-to-back slots tiling [window_start, window_end); a trailing
  /// partial interval yields no slot. All-or-nothing with respect to overlap.
  std::vector<TimeSlot> generate_slots(UserId caller, SetupId setup, TimePoint window_start,
                                       TimePoint window_end, Minutes slot_length);

  Booking book_slot(UserId caller, GroupId group, SlotId slot, TimePoint now);
  Booking cancel_booking(UserId caller, BookingId booking, TimePoint now);

  /// nullopt means Unlimited. `setup` matters only under a per-setup scope.
  [[nodiscard]] std::optional<std::uint32_t> quota_remaining(
      GroupId group, IsoWeek week, std::optional<SetupId> setup = std::nullopt) const;

  /// Slots of the setup intersecting [from, to), ordered by start.
  [[nodiscard]] std::vector<SlotAvailability> list_available(SetupId setup, TimePoint from,
                                                             TimePoint to) const;

  [[nodiscard]] const QuotaPolicy& policy() const { return policy_; }

 private:
  Store& store_;
  QuotaPolicy policy_;
  std::vector<std::unique_ptr<BookingRestriction>> restrictions_;
};

}  // namespace rlab::booking
