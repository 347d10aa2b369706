#include "rlab/vm/pool.hpp"

#include "rlab/common/crypto.hpp"
#include "rlab/common/error.hpp"
#include "rlab/domain/permissions.hpp"

namespace rlab::vm {

std::string_view to_string(VmState state) noexcept {
  switch (state) {
    case VmState::Available: return "Available";
    case VmState::Assigned: return "Assigned";
    case VmState::Resetting: return "Resetting";
    case VmState::Failed: return "Failed";
  }
  return "Unknown";
}

std::size_t PoolConfig::capacity_for(SetupId setup) const {
  const auto it = capacity.find(setup);
  return it == capacity.end() ? default_capacity : it->second;
}

VmPool::VmPool(Store& store, HypervisorDriver& driver, ImageStore& images, PoolConfig config)
    : store_(store), driver_(driver), images_(images), config_(std::move(config)) {}

ImageRecord VmPool::register_image(UserId caller, const std::string& label,
                                   std::span<const std::uint8_t> content) {
  const auto digest = crypto::to_hex(crypto::sha256(content));
  return store_.write([&](Store::Transaction& tx) {
    const auto& s = tx.state();
    require_permission(s, caller_of(s, caller), Action::RegisterImage);
    if (const auto it = s.images.find(digest); it != s.images.end()) {
      return it->second;
    }
    images_.put(digest, content);
    ImageRecord record{digest, label, content.size()};
    tx.commit(event_kind::kImageRegistered, record);
    return record;
  });
}

void VmPool::transition(VmHandle& vm, VmState to) {
  transitions_.push_back(VmTransition{vm.id, vm.state, to});
  vm.state = to;
}

VmHandle VmPool::provision_locked(const LabSetup& setup) {
  auto content = images_.get(setup.base_image);
  if (!content) {
    throw Error(Errc::UnknownImage, "no content stored for image " + setup.base_image);
  }
  const VmId id{next_vm_};
  std::string endpoint;
  try {
    endpoint = driver_.provision(ProvisionRequest{id, setup.id, setup.base_image, content});
    driver_.start(id);
  } catch (const Error& e) {
    throw Error(Errc::DriverFailure, "provisioning VM for setup " + setup.id.str() + " failed: " + e.what());
  }
  ++next_vm_;
  VmHandle vm;
  vm.id = id;
  vm.setup_id = setup.id;
  vm.base = setup.base_image;
  vm.state = VmState::Available;
  vm.desktop_endpoint = endpoint;
  transitions_.push_back(VmTransition{id, std::nullopt, VmState::Available});
  return vms_[id] = vm;
}

void VmPool::prewarm(SetupId setup_id) {
  const auto setup = store_.read([&](const LabState& s) { return s.require_setup(setup_id); });
  std::lock_guard lock(mutex_);
  std::size_t have = 0;
  for (const auto& [id, vm] : vms_) {
    have += vm.setup_id == setup_id;
  }
  for (; have < config_.capacity_for(setup_id); ++have) {
    provision_locked(setup);
  }
}

VmHandle VmPool::acquire_vm(SetupId setup_id, SessionId session, TimePoint lease_until) {
  const auto setup = store_.read([&](const LabState& s) { return s.require_setup(setup_id); });
  if (!setup.enabled) {
    throw Error(Errc::InvalidState, "setup " + setup_id.str() + " is disabled");
  }
  std::lock_guard lock(mutex_);
  VmHandle* chosen = nullptr;
  std::size_t in_pool = 0;
  for (auto& [id, vm] : vms_) {
    if (vm.setup_id != setup_id) {
      continue;
    }
    ++in_pool;
    if (vm.state == VmState::Available && chosen == nullptr) {
      chosen = &vm;
    }
  }
  if (chosen == nullptr) {
    if (in_pool >= config_.capacity_for(setup_id)) {
      throw Error(Errc::PoolExhausted, "no Available VM for setup " + setup_id.str() + " (capacity " +
                                           std::to_string(config_.capacity_for(setup_id)) + ")");
    }
    const auto fresh = provision_locked(setup);
    chosen = &vms_.at(fresh.id);
  }
  transition(*chosen, VmState::Assigned);
  chosen->dirty = true;
  chosen->session = session;
  chosen->lease_until = lease_until;
  return *chosen;
}

VmHandle VmPool::release_and_reset(VmId vm_id) {
  {
    std::lock_guard lock(mutex_);
    const auto it = vms_.find(vm_id);
    if (it == vms_.end()) {
      throw Error(Errc::NotFound, "VM " + vm_id.str() + " not found");
    }
    auto& vm = it->second;
    if (vm.state != VmState::Assigned && vm.state != VmState::Failed) {
      throw Error(Errc::InvalidState,
                  "VM " + vm_id.str() + " is " + std::string(to_string(vm.state)));
    }
    transition(vm, VmState::Resetting);
  }

  std::string digest;
  std::string error;
  try {
    digest = driver_.restore_to_base(vm_id);
  } catch (const std::exception& e) {
    error = e.what();
  }

  std::lock_guard lock(mutex_);
  auto& vm = vms_.at(vm_id);
  if (error.empty() && digest != vm.base) {
    error = "restored disk digest " + digest + " differs from base " + vm.base;
  }
  if (!error.empty()) {
    transition(vm, VmState::Failed);
    vm.last_error = error;
    throw Error(Errc::DriverFailure, "reset of VM " + vm_id.str() + " failed: " + error);
  }
  transition(vm, VmState::Available);
  vm.dirty = false;
  vm.session.reset();
  vm.lease_until.reset();
  vm.last_error.clear();
  return vm;
}

std::vector<SweepOutcome> VmPool::scheduled_sweep(TimePoint now,
                                                  const std::function<bool(SessionId)>& session_live) {
  struct Candidate {
    VmId vm;
    VmState state;
    std::optional<SessionId> session;
    std::optional<TimePoint> lease_until;
  };
  std::vector<Candidate> candidates;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, vm] : vms_) {
      if (vm.state == VmState::Assigned || vm.state == VmState::Failed) {
        candidates.push_back({id, vm.state, vm.session, vm.lease_until});
      }
    }
  }

  std::vector<SweepOutcome> outcomes;
  for (const auto& c : candidates) {
    bool stale = c.state == VmState::Failed;
    if (c.state == VmState::Assigned) {
      const bool lease_over = c.lease_until && *c.lease_until + config_.sweep_grace <= now;
      const bool orphaned = !c.session || (session_live && !session_live(*c.session));
      stale = lease_over || orphaned;
    }
    if (!stale) {
      continue;
    }
    try {
      release_and_reset(c.vm);
      outcomes.push_back({c.vm, true, {}});
    } catch (const Error& e) {
      if (e.code() == Errc::InvalidState) {
        continue;  // released concurrently
      }
      outcomes.push_back({c.vm, false, e.what()});
    }
  }
  return outcomes;
}

PoolStatus VmPool::pool_status(SetupId setup) const {
  (void)store_.read([&](const LabState& s) { return s.require_setup(setup).id; });
  std::lock_guard lock(mutex_);
  PoolStatus status;
  for (const auto& [id, vm] : vms_) {
    if (vm.setup_id != setup) {
      continue;
    }
    switch (vm.state) {
      case VmState::Available: ++status.available; break;
      case VmState::Assigned: ++status.assigned; break;
      case VmState::Resetting: ++status.resetting; break;
      case VmState::Failed: ++status.failed; break;
    }
  }
  return status;
}

std::optional<VmHandle> VmPool::find(VmId vm) const {
  std::lock_guard lock(mutex_);
  const auto it = vms_.find(vm);
  return it == vms_.end() ? std::nullopt : std::optional{it->second};
}

std::vector<VmHandle> VmPool::vms() const {
  std::lock_guard lock(mutex_);
  std::vector<VmHandle> out;
  for (const auto& [id, vm] : vms_) {
    out.push_back(vm);
  }
  return out;
}

std::vector<VmTransition> VmPool::transitions() const {
  std::lock_guard lock(mutex_);
  return transitions_;
}

}  // namespace rlab::vm
