#include "rlab/sim/sim_hypervisor.hpp"

#include "rlab/common/crypto.hpp"
#include "rlab/common/error.hpp"

namespace rlab::sim {

SimHypervisor::SimHypervisor(FaultPlan plan, CallLog* log, EndpointFactory endpoints)
    : plan_(std::move(plan)), log_(log), endpoints_(std::move(endpoints)) {}

void SimHypervisor::maybe_fail(const std::string& op, VmId vm) {
  if (log_) {
    log_->record("hypervisor", op, vm.str());
  }
  if (plan_.next_call_fails(op)) {
    throw Error(Errc::DriverFailure, "injected " + op + " failure for VM " + vm.str());
  }
}

SimHypervisor::Disk& SimHypervisor::require(VmId vm) {
  const auto it = disks_.find(vm);
  if (it == disks_.end()) {
    throw Error(Errc::DriverFailure, "unknown VM " + vm.str());
  }
  return it->second;
}

std::string SimHypervisor::provision(const vm::ProvisionRequest& request) {
  maybe_fail("provision", request.vm);
  {
    std::lock_guard lock(mutex_);
    disks_[request.vm] = Disk{request.base_content, *request.base_content, false};
  }
  return endpoints_ ? endpoints_(request.vm) : "sim://vm-" + request.vm.str();
}

void SimHypervisor::start(VmId vm) {
  maybe_fail("start", vm);
  std::lock_guard lock(mutex_);
  require(vm).running = true;
}

void SimHypervisor::stop(VmId vm) {
  maybe_fail("stop", vm);
  std::lock_guard lock(mutex_);
  require(vm).running = false;
}

std::string SimHypervisor::restore_to_base(VmId vm) {
  maybe_fail("restore_to_base", vm);
  std::lock_guard lock(mutex_);
  auto& disk = require(vm);
  disk.bytes = *disk.base;
  return crypto::to_hex(crypto::sha256(disk.bytes));
}

vm::VmProbe SimHypervisor::probe(VmId vm) {
  maybe_fail("probe", vm);
  std::lock_guard lock(mutex_);
  auto& disk = require(vm);
  return {disk.running, crypto::to_hex(crypto::sha256(disk.bytes))};
}

void SimHypervisor::write_disk(VmId vm, std::size_t offset, std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(mutex_);
  auto& disk = require(vm);
  if (disk.bytes.size() < offset + bytes.size()) {
    disk.bytes.resize(offset + bytes.size());
  }
  std::copy(bytes.begin(), bytes.end(), disk.bytes.begin() + static_cast<std::ptrdiff_t>(offset));
}

vm::Bytes SimHypervisor::disk(VmId vm) const {
  std::lock_guard lock(mutex_);
  const auto it = disks_.find(vm);
  if (it == disks_.end()) {
    throw Error(Errc::DriverFailure, "unknown VM " + vm.str());
  }
  return it->second.bytes;
}

std::string SimHypervisor::disk_digest(VmId vm) const {
  return crypto::to_hex(crypto::sha256(disk(vm)));
}

}  // namespace rlab::sim
