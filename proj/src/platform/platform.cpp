#include "rlab/platform/platform.hpp"

#include <iostream>

namespace rlab {
namespace {

std::unique_ptr<Store> open_store(const PlatformConfig& config, const Clock& clock) {
  if (config.data_dir.empty()) return Store::in_memory(clock);
  return Store::open_directory(std::filesystem::path(config.data_dir) / "state", config.fsync, clock);
}

std::optional<std::filesystem::path> image_dir(const PlatformConfig& config) {
  if (config.data_dir.empty()) return std::nullopt;
  return std::filesystem::path(config.data_dir) / "images";
}

}  // namespace

Platform::Platform(PlatformConfig cfg, const Clock& clk)
    : config(std::move(cfg)),
      clock(clk),
      store(open_store(config, clock)),
      directory(*store, config.directory),
      scheduler(*store, config.quota),
      images(image_dir(config)),
      hypervisor(config.drivers.hypervisor_faults, nullptr, [this](VmId vm) { return spawn_desktop(vm); }),
      pool(*store, hypervisor, images, config.pools),
      conference(config.drivers.seed, config.drivers.conference_faults, nullptr, config.drivers.conference_url),
      rooms(conference),
      relay(config.relay, relay::tcp_connector(config.relay.connect_timeout)),
      broker(*store, pool, rooms, relay, &bus, config.broker),
      chat(*store, &bus),
      hardware(config.drivers.seed, config.drivers.hardware_faults, nullptr,
               config.drivers.hardware_period_seconds),
      hw(*store, hardware, [this](const std::string& t, TimePoint now) { return broker.validate_token(t, now); },
         &bus),
      auth(*store, config.token_lifetime) {
  relay.set_token_validator([this](SessionId sid, const std::string& token) -> std::optional<UserId> {
    const auto p = broker.validate_token(token, clock.now());
    if (!p || p->session != sid) return std::nullopt;
    return p->user;
  });
  if (config.bootstrap_admin) {
    const bool has_admin = store->read([](const LabState& s) {
      for (const auto& [id, u] : s.users) {
        if (u.role == Role::Administrator) return true;
      }
      return false;
    });
    if (!has_admin) directory.bootstrap_admin(config.bootstrap_admin->display_name, config.bootstrap_admin->credential);
  }
  recovered_ = broker.recover(clock.now());
  snapshot_seq_ = store->log().last_seq();
}

Platform::~Platform() {
  stop_sweeper();
  std::vector<SessionId> live;
  store->read([&](const LabState& s) {
    for (const auto& [id, rec] : s.sessions) {
      if (rec.state != SessionState::Ended) live.push_back(id);
    }
  });
  // Drop relay connections before the desktop servers go away; the sessions
  // themselves stay live in the log and recover() ends them on next start.
  for (auto id : live) relay.close_session_channels(id);
  std::lock_guard lock(desktops_mutex_);
  for (auto& [vm, desktop] : desktops_) desktop->stop();
}

std::string Platform::spawn_desktop(VmId vm) {
  auto server = std::make_unique<sim::SimDesktopServer>(config.drivers.desktop, nullptr);
  auto endpoint = server->endpoint();
  std::lock_guard lock(desktops_mutex_);
  desktops_[vm] = std::move(server);
  return endpoint;
}

sim::SimDesktopServer* Platform::desktop(VmId vm) {
  std::lock_guard lock(desktops_mutex_);
  auto it = desktops_.find(vm);
  return it == desktops_.end() ? nullptr : it->second.get();
}

collab::CameraSource& Platform::camera(SetupId setup) {
  std::lock_guard lock(cameras_mutex_);
  auto& slot = cameras_[setup];
  if (!slot) {
    slot = std::make_unique<sim::SimCamera>(clock, config.drivers.camera_fps, config.drivers.camera_width,
                                            config.drivers.camera_height, "setup " + std::to_string(setup.value));
  }
  return *slot;
}

session::BrokerSweep Platform::sweep() {
  const auto now = clock.now();
  auto outcome = broker.sweep(now);
  auth.purge(now);
  const auto last = store->log().last_seq();
  if (config.snapshot_every > 0 && !config.data_dir.empty() && last >= snapshot_seq_ + config.snapshot_every) {
    store->take_snapshot();
    snapshot_seq_ = last;
  }
  return outcome;
}

void Platform::start_sweeper() {
  std::lock_guard lock(sweeper_mutex_);
  if (sweeper_.joinable()) return;
  sweeper_stop_ = false;
  sweeper_ = std::thread([this] {
    std::unique_lock lock(sweeper_mutex_);
    while (!sweeper_cv_.wait_for(lock, config.sweep_interval, [this] { return sweeper_stop_; })) {
      lock.unlock();
      try {
        sweep();
      } catch (const std::exception& e) {
        std::cerr << "sweep failed: " << e.what() << '\n';
      }
      lock.lock();
    }
  });
}

void Platform::stop_sweeper() {
  {
    std::lock_guard lock(sweeper_mutex_);
    sweeper_stop_ = true;
  }
  sweeper_cv_.notify_all();
  if (sweeper_.joinable()) sweeper_.join();
}

}  // namespace rlab
