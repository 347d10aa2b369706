#include "rlab/sim/fault_plan.hpp"

#include <thread>

#include "rlab/common/crypto.hpp"

namespace rlab::sim {

FaultPlan::FaultPlan(const FaultPlan& other) {
  std::lock_guard lock(other.mutex_);
  faults_ = other.faults_;
  calls_ = other.calls_;
}

FaultPlan& FaultPlan::operator=(const FaultPlan& other) {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    faults_ = other.faults_;
    calls_ = other.calls_;
  }
  return *this;
}

FaultPlan& FaultPlan::fail_on(const std::string& op, std::uint64_t nth) {
  std::lock_guard lock(mutex_);
  faults_[op].fail_on.insert(nth);
  return *this;
}

FaultPlan& FaultPlan::fail_from(const std::string& op, std::uint64_t nth) {
  std::lock_guard lock(mutex_);
  faults_[op].fail_from = nth;
  return *this;
}

FaultPlan& FaultPlan::latency(const std::string& op, std::chrono::milliseconds delay) {
  std::lock_guard lock(mutex_);
  faults_[op].latency = delay;
  return *this;
}

bool FaultPlan::next_call_fails(const std::string& op) {
  std::chrono::milliseconds delay{0};
  bool fail = false;
  {
    std::lock_guard lock(mutex_);
    const auto n = ++calls_[op];
    if (const auto it = faults_.find(op); it != faults_.end()) {
      delay = it->second.latency;
      fail = it->second.fail_on.contains(n) || (it->second.fail_from && n >= *it->second.fail_from);
    }
  }
  if (delay.count() > 0) {
    std::this_thread::sleep_for(delay);
  }
  return fail;
}

std::uint64_t FaultPlan::calls(const std::string& op) const {
  std::lock_guard lock(mutex_);
  const auto it = calls_.find(op);
  return it == calls_.end() ? 0 : it->second;
}

FaultPlan FaultPlan::from_json(const nlohmann::json& j) {
  FaultPlan plan;
  for (const auto& [op, spec] : j.items()) {
    for (const auto n : spec.value("fail_on", std::vector<std::uint64_t>{})) {
      plan.fail_on(op, n);
    }
    if (spec.contains("fail_from")) {
      plan.fail_from(op, spec.at("fail_from").get<std::uint64_t>());
    }
    if (spec.contains("latency_ms")) {
      plan.latency(op, std::chrono::milliseconds{spec.at("latency_ms").get<std::int64_t>()});
    }
  }
  return plan;
}

void CallLog::record(const std::string& driver, const std::string& operation, const std::string& args) {
  const auto digest = crypto::to_hex(crypto::sha256(args)).substr(0, 16);
  std::lock_guard lock(mutex_);
  records_.push_back(CallRecord{driver, operation, digest, clock_ ? clock_->now() : TimePoint{}});
}

std::vector<CallRecord> CallLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t CallLog::count(const std::string& driver, const std::string& operation) const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& r : records_) {
    n += r.driver == driver && r.operation == operation;
  }
  return n;
}

std::vector<std::string> CallLog::signature() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    out.push_back(r.driver + "." + r.operation + "(" + r.args_digest + ")");
  }
  return out;
}

}  // namespace rlab::sim
