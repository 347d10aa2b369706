#pragma once

#include <string>
#include <vector>

namespace rlab::acceptance {

struct Outcome {
  bool ok = false;
  std::string detail;
};

/// Collects failed checks; the first few end up in the report line.
class Checks {
 public:
  bool check(bool condition, const std::string& what) {
    if (!condition) failures_.push_back(what);
    return condition;
  }
  void note(const std::string& text) { notes_.push_back(text); }

  [[nodiscard]] Outcome outcome() const {
    Outcome o;
    o.ok = failures_.empty();
    const auto& lines = o.ok ? notes_ : failures_;
    for (std::size_t i = 0; i < lines.size() && i < 4; ++i) {
      if (i) o.detail += "; ";
      o.detail += lines[i];
    }
    if (lines.size() > 4) o.detail += "; +" + std::to_string(lines.size() - 4) + " more";
    return o;
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

Outcome scenario_replay();
Outcome booking_race();
Outcome session_lifecycle();
Outcome relay_ordering();
Outcome cross_session_chat();
Outcome crash_consistency();
Outcome authorization_sweep();

}  // namespace rlab::acceptance
