#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlab/common/time.hpp"

namespace rlab::sim {

/// Per-operation failure schedule for a simulated driver. Calls are counted
/// per operation name from 1; the same plan and call order always produce the
/// same failures.
class FaultPlan {
 public:
  /// Transient failure of the n-th call.
  FaultPlan& fail_on(const std::string& op, std::uint64_t nth);
  /// Permanent failure from the n-th call onward.
  FaultPlan& fail_from(const std::string& op, std::uint64_t nth);
  FaultPlan& latency(const std::string& op, std::chrono::milliseconds delay);

  /// Counts the call, sleeps the configured latency, and reports whether
  /// this call must fail.
  bool next_call_fails(const std::string& op);
  [[nodiscard]] std::uint64_t calls(const std::string& op) const;

  /// {"restore_to_base": {"fail_on": [1], "fail_from": 5, "latency_ms": 10}}
  static FaultPlan from_json(const nlohmann::json& j);

  FaultPlan() = default;
  FaultPlan(const FaultPlan& other);
  FaultPlan& operator=(const FaultPlan& other);

 private:
  struct OpFault {
    std::set<std::uint64_t> fail_on;
    std::optional<std::uint64_t> fail_from;
    std::chrono::milliseconds latency{0};
  };
  mutable std::mutex mutex_;
  std::map<std::string, OpFault> faults_;
  std::map<std::string, std::uint64_t> calls_;
};

struct CallRecord {
  std::string driver;
  std::string operation;
  std::string args_digest;
  TimePoint at{};
};

/// Append-only record of driver invocations in the order each driver
/// serialized them.
class CallLog {
 public:
  explicit CallLog(const Clock* clock = nullptr) : clock_(clock) {}

  void record(const std::string& driver, const std::string& operation, const std::string& args);
  [[nodiscard]] std::vector<CallRecord> records() const;
  [[nodiscard]] std::size_t count(const std::string& driver, const std::string& operation) const;
  /// "driver.operation(digest)" lines without timestamps, for run-to-run comparison.
  [[nodiscard]] std::vector<std::string> signature() const;

 private:
  const Clock* clock_;
  mutable std::mutex mutex_;
  std::vector<CallRecord> records_;
};

}  // namespace rlab::sim
