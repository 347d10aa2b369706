#include "rlab/booking/scheduler.hpp"

#include <algorithm>

#include "rlab/common/error.hpp"

namespace rlab::booking {

QuotaPolicy QuotaPolicy::per_week(std::uint32_t max, QuotaScope scope) {
  if (max < 1) {
    throw Error(Errc::InvalidArgument, "weekly quota must be at least 1");
  }
  return QuotaPolicy{max, scope};
}

std::uint32_t count_active_in_week(const LabState& state, GroupId group, IsoWeek week,
                                   std::optional<SetupId> setup) {
  std::uint32_t n = 0;
  for (const auto& [id, b] : state.bookings) {
    if (b.group_id != group || b.state != BookingState::Active) {
      continue;
    }
    const auto& slot = state.slots.at(b.slot_id);
    if (setup && slot.setup_id != *setup) {
      continue;
    }
    if (iso_week_of(slot.start) == week) {
      ++n;
    }
  }
  return n;
}

void WeeklyQuota::check(const LabState& state, const Group& group, const TimeSlot& slot) const {
  if (!policy_.max_slots_per_group_per_week) {
    return;
  }
  const auto week = iso_week_of(slot.start);
  const auto scope_setup =
      policy_.scope == QuotaScope::PerSetup ? std::optional{slot.setup_id} : std::nullopt;
  const auto used = count_active_in_week(state, group.id, week, scope_setup);
  if (used >= *policy_.max_slots_per_group_per_week) {
    throw Error(Errc::QuotaExceeded,
                "group " + group.id.str() + " already holds " + std::to_string(used) +
                    " booking(s) in " + week.str());
  }
}

Scheduler::Scheduler(Store& store, QuotaPolicy policy) : store_(store), policy_(policy) {
  if (policy_.max_slots_per_group_per_week && *policy_.max_slots_per_group_per_week < 1) {
    throw Error(Errc::InvalidArgument, "weekly quota must be at least 1");
  }
  restrictions_.push_back(std::make_unique<WeeklyQuota>(policy_));
}

void Scheduler::add_restriction(std::unique_ptr<BookingRestriction> restriction) {
  restrictions_.push_back(std::move(restriction));
}

std::vector<TimeSlot> Scheduler::generate_slots(UserId caller, SetupId setup,
                                                TimePoint window_start, TimePoint window_end,
                                                Minutes slot_length) {
  if (slot_length.count() <= 0) {
    throw Error(Errc::InvalidArgument, "slot length must be positive");
  }
  if (window_end <= window_start) {
    throw Error(Errc::InvalidWindow, "window end must be after window start");
  }
  window_start = std::chrono::floor<Minutes>(window_start);
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    (void)s.require_setup(setup);
    require_permission(s, caller_of(s, caller), Action::GenerateSlots, setup);

    const auto count = (window_end - window_start) / slot_length;
    std::vector<TimeSlot> fresh;
    if (count <= 0) {
      return fresh;
    }
    const TimePoint covered_end = window_start + slot_length * count;
    if (const auto it = s.slots_by_setup.find(setup); it != s.slots_by_setup.end()) {
      for (const SlotId id : it->second) {
        const auto& existing = s.slots.at(id);
        if (existing.start < covered_end && window_start < existing.end()) {
          throw Error(Errc::OverlapExisting, "slot " + id.str() + " already covers " +
                                                 format_iso8601(existing.start));
        }
      }
    }
    SlotId next = s.next_slot_id();
    for (std::int64_t i = 0; i < count; ++i) {
      fresh.push_back(TimeSlot{next, setup, window_start + slot_length * i, slot_length});
      next = SlotId{next.value + 1};
    }
    tx.commit(event_kind::kSlotsGenerated, Json{{"setup_id", setup}, {"slots", fresh}});
    return fresh;
  });
}

Booking Scheduler::book_slot(UserId caller, GroupId group, SlotId slot_id, TimePoint now) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    const auto& g = s.require_group(group);
    const auto& slot = s.require_slot(slot_id);
    require_permission(s, caller_of(s, caller), Action::BookSlot, group);
    if (!s.setup_linked_to_course(slot.setup_id, g.course_id)) {
      throw Error(Errc::NotEligible, "setup " + slot.setup_id.str() +
                                         " is not linked to course " + g.course_id.str());
    }
    if (slot.start <= now) {
      throw Error(Errc::SlotInPast, "slot " + slot_id.str() + " starts at " +
                                        format_iso8601(slot.start));
    }
    if (const auto holder = s.active_booking_for(slot_id)) {
      throw Error(Errc::SlotTaken, "slot " + slot_id.str() + " is held by booking " + holder->str());
    }
    for (const auto& r : restrictions_) {
      r->check(s, g, slot);
    }
    Booking booking{s.next_booking_id(), slot_id, group, now, BookingState::Active};
    tx.commit(event_kind::kBookingCreated, booking);
    return booking;
  });
}

Booking Scheduler::cancel_booking(UserId caller, BookingId booking_id, TimePoint now) {
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    const auto& booking = s.require_booking(booking_id);
    require_permission(s, caller_of(s, caller), Action::CancelBooking, booking_id);
    if (booking.state != BookingState::Active) {
      throw Error(Errc::InvalidState, "booking " + booking_id.str() + " is already cancelled");
    }
    if (now >= s.require_slot(booking.slot_id).start) {
      throw Error(Errc::AlreadyStarted, "slot of booking " + booking_id.str() + " has started");
    }
    tx.commit(event_kind::kBookingCancelled, Json{{"booking_id", booking_id}, {"by", caller}});
    return s.bookings.at(booking_id);
  });
}

std::optional<std::uint32_t> Scheduler::quota_remaining(GroupId group, IsoWeek week,
                                                        std::optional<SetupId> setup) const {
  return store_.read([&](const LabState& s) -> std::optional<std::uint32_t> {
    (void)s.require_group(group);
    if (!policy_.max_slots_per_group_per_week) {
      return std::nullopt;
    }
    const auto scope_setup = policy_.scope == QuotaScope::PerSetup ? setup : std::nullopt;
    const auto used = count_active_in_week(s, group, week, scope_setup);
    const auto max = *policy_.max_slots_per_group_per_week;
    return used >= max ? 0u : max - used;
  });
}

std::vector<SlotAvailability> Scheduler::list_available(SetupId setup, TimePoint from,
                                                        TimePoint to) const {
  if (to < from) {
    throw Error(Errc::InvalidWindow, "range end before range start");
  }
  return store_.read([&](const LabState& s) {
    (void)s.require_setup(setup);
    std::vector<SlotAvailability> out;
    const auto it = s.slots_by_setup.find(setup);
    if (it == s.slots_by_setup.end()) {
      return out;
    }
    for (const SlotId id : it->second) {
      const auto& slot = s.slots.at(id);
      if (slot.start < to && from < slot.end()) {
        out.push_back({slot, !s.active_booking_for(id).has_value()});
      }
    }
    return out;
  });
}

}  // namespace rlab::booking
