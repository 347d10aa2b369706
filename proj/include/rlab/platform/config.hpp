#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rlab/booking/scheduler.hpp"
#include "rlab/domain/directory.hpp"
#include "rlab/relay/relay.hpp"
#include "rlab/session/broker.hpp"
#include "rlab/sim/fault_plan.hpp"
#include "rlab/sim/sim_desktop.hpp"
#include "rlab/vm/pool.hpp"

namespace rlab {

struct DriverConfig {
  std::string hypervisor = "sim";
  std::uint64_t seed = 1;
  sim::FaultPlan hypervisor_faults;
  sim::FaultPlan conference_faults;
  sim::FaultPlan hardware_faults;
  sim::SimDesktopConfig desktop;
  double camera_fps = 2.0;
  std::uint16_t camera_width = 160;
  std::uint16_t camera_height = 120;
  double hardware_period_seconds = 60.0;
  std::string conference_url = "https://meet.example.invalid/";
};

struct BootstrapAdmin {
  std::string display_name;
  std::string credential;
};

struct PlatformConfig {
  std::string bind = "127.0.0.1";
  std::uint16_t port = 8080;
  /// Empty keeps everything in memory.
  std::string data_dir;
  bool fsync = true;
  /// Take a snapshot from the sweeper once this many events accumulated; 0 never.
  std::uint64_t snapshot_every = 1000;
  booking::QuotaPolicy quota = booking::QuotaPolicy::per_week(2);
  DirectoryConfig directory;
  std::chrono::seconds token_lifetime{std::chrono::hours{12}};
  std::optional<BootstrapAdmin> bootstrap_admin;
  vm::PoolConfig pools;
  session::BrokerConfig broker;
  relay::RelayConfig relay;
  DriverConfig drivers;
  std::chrono::seconds sweep_interval{30};
  unsigned server_threads = 4;

  /// Missing keys keep their defaults; wrong types throw InvalidArgument.
  static PlatformConfig from_json(const Json& j);
  static PlatformConfig load(const std::filesystem::path& path);
};

}  // namespace rlab
