#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "rlab/booking/scheduler.hpp"
#include "rlab/collab/services.hpp"
#include "rlab/domain/directory.hpp"
#include "rlab/domain/store.hpp"
#include "rlab/gateway/auth.hpp"
#include "rlab/platform/config.hpp"
#include "rlab/relay/relay.hpp"
#include "rlab/session/broker.hpp"
#include "rlab/sim/devices.hpp"
#include "rlab/sim/sim_desktop.hpp"
#include "rlab/sim/sim_hypervisor.hpp"
#include "rlab/vm/pool.hpp"

namespace rlab {

/// Every backend module wired together on the simulated drivers. Each
/// provisioned VM gets its own loopback desktop server.
class Platform {
 public:
  Platform(PlatformConfig config, const Clock& clock);
  ~Platform();
  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;

  /// Runs sweep() every sweep_interval until stop_sweeper() or destruction.
  void start_sweeper();
  void stop_sweeper();
  /// One maintenance pass: session and pool sweep, token purge and, when
  /// enough events accumulated, a snapshot.
  session::BrokerSweep sweep();

  /// Camera for a setup, created on first use.
  collab::CameraSource& camera(SetupId setup);
  [[nodiscard]] sim::SimDesktopServer* desktop(VmId vm);
  [[nodiscard]] std::vector<SessionId> recovered() const { return recovered_; }

  const PlatformConfig config;
  const Clock& clock;
  std::unique_ptr<Store> store;
  Directory directory;
  booking::Scheduler scheduler;
  vm::ImageStore images;
  sim::SimHypervisor hypervisor;
  vm::VmPool pool;
  sim::SimConference conference;
  collab::RoomManager rooms;
  relay::Relay relay;
  collab::EventBus bus;
  session::SessionBroker broker;
  collab::ChatService chat;
  sim::SimHardware hardware;
  collab::HardwareService hw;
  gateway::AuthService auth;

 private:
  std::string spawn_desktop(VmId vm);

  std::mutex desktops_mutex_;
  std::map<VmId, std::unique_ptr<sim::SimDesktopServer>> desktops_;
  std::mutex cameras_mutex_;
  std::map<SetupId, std::unique_ptr<sim::SimCamera>> cameras_;
  std::vector<SessionId> recovered_;
  std::uint64_t snapshot_seq_ = 0;

  std::mutex sweeper_mutex_;
  std::condition_variable sweeper_cv_;
  bool sweeper_stop_ = false;
  std::thread sweeper_;
};

}  // namespace rlab
