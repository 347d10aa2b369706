#include "rlab/platform/config.hpp"

#include <fstream>

#include "rlab/common/error.hpp"

namespace rlab {
namespace {

template <class T>
void take(const Json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw Error(Errc::InvalidArgument, std::string("config key '") + key + "' must be an object");
  return j.at(key);
}

}  // namespace

PlatformConfig PlatformConfig::from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidArgument, "config must be a JSON object");
  PlatformConfig c;
  take(j, "bind", c.bind);
  take(j, "port", c.port);
  take(j, "data_dir", c.data_dir);
  take(j, "server_threads", c.server_threads);

  const auto& persistence = section(j, "persistence");
  take(persistence, "fsync", c.fsync);
  take(persistence, "snapshot_every", c.snapshot_every);

  if (j.contains("quota")) {
    const auto& q = j.at("quota");
    if (q.is_null()) {
      c.quota = booking::QuotaPolicy::unlimited();
    } else {
      const auto& qs = section(j, "quota");
      std::optional<std::uint32_t> max;
      if (qs.contains("max_slots_per_group_per_week") && !qs.at("max_slots_per_group_per_week").is_null()) {
        std::uint32_t v = 0;
        take(qs, "max_slots_per_group_per_week", v);
        max = v;
      }
      std::string scope = "global";
      take(qs, "scope", scope);
      if (scope != "global" && scope != "per_setup") {
        throw Error(Errc::InvalidArgument, "quota scope must be 'global' or 'per_setup'");
      }
      const auto s = scope == "global" ? booking::QuotaScope::Global : booking::QuotaScope::PerSetup;
      c.quota = max ? booking::QuotaPolicy::per_week(*max, s) : booking::QuotaPolicy::unlimited();
    }
  }

  const auto& groups = section(j, "group_size");
  take(groups, "min", c.directory.min_group_size);
  take(groups, "max", c.directory.max_group_size);
  if (c.directory.min_group_size == 0 || c.directory.min_group_size > c.directory.max_group_size) {
    throw Error(Errc::InvalidArgument, "group_size needs 0 < min <= max");
  }

  const auto& auth = section(j, "auth");
  long long hours = 12;
  take(auth, "token_hours", hours);
  if (hours <= 0) throw Error(Errc::InvalidArgument, "auth.token_hours must be positive");
  c.token_lifetime = std::chrono::hours{hours};
  take(auth, "credential_iterations", c.directory.credential_iterations);
  if (auth.contains("bootstrap_admin")) {
    const auto& b = section(auth, "bootstrap_admin");
    BootstrapAdmin admin;
    take(b, "display_name", admin.display_name);
    take(b, "credential", admin.credential);
    if (admin.display_name.empty() || admin.credential.empty()) {
      throw Error(Errc::InvalidArgument, "bootstrap_admin needs display_name and credential");
    }
    c.bootstrap_admin = admin;
  }

  const auto& pools = section(j, "pools");
  take(pools, "default_capacity", c.pools.default_capacity);
  if (pools.contains("capacity")) {
    for (const auto& [key, value] : section(pools, "capacity").items()) {
      try {
        c.pools.capacity[SetupId{std::stoull(key)}] = value.get<std::size_t>();
      } catch (const std::exception&) {
        throw Error(Errc::InvalidArgument, "pools.capacity keys are setup ids, values counts");
      }
    }
  }
  long long pool_grace = 5;
  take(pools, "sweep_grace_minutes", pool_grace);
  c.pools.sweep_grace = Minutes{pool_grace};

  const auto& grace = section(j, "grace");
  long long early = 5, token = 5, end = 5;
  take(grace, "early_start_minutes", early);
  take(grace, "token_minutes", token);
  take(grace, "end_minutes", end);
  if (early < 0 || token < 0 || end < 0) throw Error(Errc::InvalidArgument, "grace periods must be >= 0");
  c.broker.early_grace = Minutes{early};
  c.broker.token_grace = Minutes{token};
  c.broker.end_grace = Minutes{end};

  long long sweep = 30;
  take(j, "sweep_interval_seconds", sweep);
  if (sweep <= 0) throw Error(Errc::InvalidArgument, "sweep_interval_seconds must be positive");
  c.sweep_interval = std::chrono::seconds{sweep};

  const auto& relay = section(j, "relay");
  take(relay, "client_queue_frames", c.relay.client_queue_frames);
  long long connect_ms = 2000;
  take(relay, "connect_timeout_ms", connect_ms);
  c.relay.connect_timeout = std::chrono::milliseconds{connect_ms};

  const auto& drivers = section(j, "drivers");
  take(drivers, "hypervisor", c.drivers.hypervisor);
  if (c.drivers.hypervisor != "sim") {
    throw Error(Errc::InvalidArgument, "unknown hypervisor driver '" + c.drivers.hypervisor + "'");
  }
  take(drivers, "seed", c.drivers.seed);
  if (drivers.contains("faults")) {
    const auto& faults = section(drivers, "faults");
    try {
      if (faults.contains("hypervisor")) c.drivers.hypervisor_faults = sim::FaultPlan::from_json(faults.at("hypervisor"));
      if (faults.contains("conference")) c.drivers.conference_faults = sim::FaultPlan::from_json(faults.at("conference"));
      if (faults.contains("hardware")) c.drivers.hardware_faults = sim::FaultPlan::from_json(faults.at("hardware"));
    } catch (const Json::exception& e) {
      throw Error(Errc::InvalidArgument, std::string("malformed fault plan: ") + e.what());
    }
  }
  const auto& desktop = section(drivers, "desktop");
  take(desktop, "width", c.drivers.desktop.width);
  take(desktop, "height", c.drivers.desktop.height);
  take(desktop, "fps", c.drivers.desktop.fps);
  std::string encoding = "raw";
  take(desktop, "encoding", encoding);
  if (encoding != "raw" && encoding != "rle") throw Error(Errc::InvalidArgument, "desktop encoding must be raw or rle");
  c.drivers.desktop.encoding = encoding == "rle" ? relay::FrameEncoding::Rle : relay::FrameEncoding::Raw;
  const auto& camera = section(drivers, "camera");
  take(camera, "fps", c.drivers.camera_fps);
  take(camera, "width", c.drivers.camera_width);
  take(camera, "height", c.drivers.camera_height);
  if (c.drivers.camera_fps <= 0) throw Error(Errc::InvalidArgument, "camera fps must be positive");
  take(drivers, "hardware_period_seconds", c.drivers.hardware_period_seconds);
  take(drivers, "conference_url", c.drivers.conference_url);
  return c;
}

PlatformConfig PlatformConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::InvalidArgument, "cannot read config file " + path.string());
  try {
    return from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw Error(Errc::InvalidArgument, "config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace rlab
