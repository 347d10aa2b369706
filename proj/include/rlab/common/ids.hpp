#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

namespace rlab {

/// Numeric identifier tagged by the entity it names, so a GroupId cannot be
/// passed where a SlotId is expected.
template <class Tag>
struct Id {
  std::uint64_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::uint64_t v) : value(v) {}

  constexpr auto operator<=>(const Id&) const = default;
  [[nodiscard]] std::string str() const { return std::to_string(value); }
};

template <class Tag>
void to_json(nlohmann::json& j, const Id<Tag>& id) {
  j = id.value;
}

template <class Tag>
void from_json(const nlohmann::json& j, Id<Tag>& id) {
  id.value = j.get<std::uint64_t>();
}

using UserId = Id<struct UserTag>;
using CourseId = Id<struct CourseTag>;
using GroupId = Id<struct GroupTag>;
using SetupId = Id<struct SetupTag>;
using SlotId = Id<struct SlotTag>;
using BookingId = Id<struct BookingTag>;
using SessionId = Id<struct SessionTag>;
using VmId = Id<struct VmTag>;
using ChatMessageId = Id<struct ChatMessageTag>;

}  // namespace rlab

template <class Tag>
struct std::hash<rlab::Id<Tag>> {
  std::size_t operator()(const rlab::Id<Tag>& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.value);
  }
};
