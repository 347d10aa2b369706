#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlab/domain/store.hpp"
#include "rlab/vm/hypervisor.hpp"

namespace rlab::vm {

enum class VmState { Available, Assigned, Resetting, Failed };

std::string_view to_string(VmState state) noexcept;

struct VmHandle {
  VmId id;
  SetupId setup_id;
  std::string base;  // base image digest
  VmState state = VmState::Available;
  std::string desktop_endpoint;
  bool dirty = false;
  std::optional<SessionId> session;
  /// End of the slot the VM was acquired for.
  std::optional<TimePoint> lease_until;
  std::string last_error;
};

/// `from` is empty for the provisioning transition.
struct VmTransition {
  VmId vm;
  std::optional<VmState> from;
  VmState to;
};

struct PoolConfig {
  std::size_t default_capacity = 1;
  std::map<SetupId, std::size_t> capacity;
  /// Assigned VMs are force-reset once lease end + grace has passed.
  Minutes sweep_grace{5};

  [[nodiscard]] std::size_t capacity_for(SetupId setup) const;
};

struct PoolStatus {
  std::size_t available = 0;
  std::size_t assigned = 0;
  std::size_t resetting = 0;
  std::size_t failed = 0;

  [[nodiscard]] std::size_t total() const { return available + assigned + resetting + failed; }
};

struct SweepOutcome {
  VmId vm;
  bool reset = false;
  std::string error;
};

/// Virtual machines per lab setup. State changes happen under one pool mutex;
/// restore calls run outside it so distinct VMs reset concurrently.
///
///   (provision) -> Available -> Assigned -> Resetting -> Available
///                                               |   ^
///                                               v   |
///                                              Failed
class VmPool {
 public:
  VmPool(Store& store, HypervisorDriver& driver, ImageStore& images, PoolConfig config);

  /// Stores content and records its digest. Registering identical content
  /// again returns the existing record.
  ImageRecord register_image(UserId caller, const std::string& label,
                             std::span<const std::uint8_t> content);

  /// Provisions VMs until the setup's pool is at capacity.
  void prewarm(SetupId setup);

  /// Hands out an Available VM (or provisions one while below capacity) bound
  /// to `session` until `lease_until`.
  VmHandle acquire_vm(SetupId setup, SessionId session, TimePoint lease_until);

  /// Assigned/Failed -> Resetting -> Available, or Failed if the driver
  /// cannot restore the base image (then throws DriverFailure).
  VmHandle release_and_reset(VmId vm);

  /// Resets every Assigned VM whose session is no longer live or whose lease
  /// plus grace has elapsed, and retries Failed VMs. Never throws for
  /// per-VM failures; VMs released concurrently by someone else are skipped.
  std::vector<SweepOutcome> scheduled_sweep(TimePoint now,
                                            const std::function<bool(SessionId)>& session_live);

  [[nodiscard]] PoolStatus pool_status(SetupId setup) const;
  [[nodiscard]] std::optional<VmHandle> find(VmId vm) const;
  [[nodiscard]] std::vector<VmHandle> vms() const;
  [[nodiscard]] std::vector<VmTransition> transitions() const;
  [[nodiscard]] const PoolConfig& config() const { return config_; }

 private:
  void transition(VmHandle& vm, VmState to);
  VmHandle provision_locked(const LabSetup& setup);

  Store& store_;
  HypervisorDriver& driver_;
  ImageStore& images_;
  PoolConfig config_;

  mutable std::mutex mutex_;
  std::map<VmId, VmHandle> vms_;
  std::vector<VmTransition> transitions_;
  std::uint64_t next_vm_ = 1;
};

}  // namespace rlab::vm
