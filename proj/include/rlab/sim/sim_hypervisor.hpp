#pragma once

#include <functional>
#include <map>
#include <mutex>

#include "rlab/sim/fault_plan.hpp"
#include "rlab/vm/hypervisor.hpp"

namespace rlab::sim {

/// Hypervisor whose VM disks are in-memory byte buffers. restore_to_base
/// rewrites the buffer from the base image.
class SimHypervisor final : public vm::HypervisorDriver {
 public:
  /// Produces the desktop endpoint for a freshly provisioned VM.
  using EndpointFactory = std::function<std::string(VmId)>;

  explicit SimHypervisor(FaultPlan plan = {}, CallLog* log = nullptr, EndpointFactory endpoints = {});

  std::string provision(const vm::ProvisionRequest& request) override;
  void start(VmId vm) override;
  void stop(VmId vm) override;
  std::string restore_to_base(VmId vm) override;
  vm::VmProbe probe(VmId vm) override;

  /// Simulates a user changing the VM's disk during a session.
  void write_disk(VmId vm, std::size_t offset, std::span<const std::uint8_t> bytes);
  [[nodiscard]] vm::Bytes disk(VmId vm) const;
  [[nodiscard]] std::string disk_digest(VmId vm) const;

  FaultPlan& faults() { return plan_; }

 private:
  struct Disk {
    std::shared_ptr<const vm::Bytes> base;
    vm::Bytes bytes;
    bool running = false;
  };
  void maybe_fail(const std::string& op, VmId vm);
  Disk& require(VmId vm);

  FaultPlan plan_;
  CallLog* log_;
  EndpointFactory endpoints_;
  mutable std::mutex mutex_;
  std::map<VmId, Disk> disks_;
};

}  // namespace rlab::sim
