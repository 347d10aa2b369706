#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "rlab/gateway/server.hpp"
#include "rlab/platform/demo.hpp"

namespace {

rlab::PlatformConfig load_config(const std::string& path) {
  return path.empty() ? rlab::PlatformConfig{} : rlab::PlatformConfig::load(path);
}

std::optional<rlab::UserId> first_admin(rlab::Platform& p) {
  return p.store->read([](const rlab::LabState& s) -> std::optional<rlab::UserId> {
    for (const auto& [id, u] : s.users) {
      if (u.role == rlab::Role::Administrator) return id;
    }
    return std::nullopt;
  });
}

int serve(rlab::PlatformConfig config) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  rlab::SystemClock clock;
  rlab::Platform platform(config, clock);
  if (!platform.recovered().empty()) {
    std::cerr << "ended " << platform.recovered().size() << " session(s) left over from the previous run\n";
  }
  rlab::gateway::Api api(platform);
  rlab::gateway::HttpServer server(api, config.bind, config.port, config.server_threads);
  server.start();
  platform.start_sweeper();
  std::cout << "listening on http://" << config.bind << ':' << server.port() << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "shutting down" << std::endl;
  server.stop();
  platform.stop_sweeper();
  return 0;
}

int seed(rlab::PlatformConfig config, const std::string& admin_credential, const std::string& week) {
  if (config.data_dir.empty()) {
    std::cerr << "seed needs a data directory (data_dir in the config or --data-dir)\n";
    return 2;
  }
  if (!config.bootstrap_admin) config.bootstrap_admin = rlab::BootstrapAdmin{"admin", admin_credential};
  rlab::SystemClock clock;
  rlab::Platform platform(config, clock);
  const auto admin = first_admin(platform);
  const auto users = platform.store->read([](const rlab::LabState& s) { return s.users.size(); });
  if (!admin || users > 1) {
    std::cerr << "data directory already holds users; refusing to seed twice\n";
    return 1;
  }
  rlab::DemoOptions options;
  const auto w = week.empty() ? rlab::iso_week_of(clock.now()) : rlab::IsoWeek::parse(week);
  options.week_start = rlab::iso_week_start(w);
  const auto data = rlab::seed_demo(platform, *admin, options);
  platform.store->take_snapshot();
  std::cout << rlab::Json{{"admin", config.bootstrap_admin->display_name},
                          {"teacher", "teacher"},
                          {"students", data.students.size()},
                          {"groups", data.groups.size()},
                          {"setups", data.setups.size()},
                          {"slots", data.slots.size()},
                          {"week", w.str()},
                          {"student_login", "student01 / " + options.credential_prefix + "01"}}
                   .dump(2)
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote lab management backend"};
  app.require_subcommand(1);

  std::string config_path;
  int port = -1;
  std::string data_dir;

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket gateway");
  serve_cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  serve_cmd->add_option("--port", port, "Listen port (overrides config)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--data-dir", data_dir, "State directory (overrides config)");

  std::string admin_credential = "admin";
  std::string week;
  auto* seed_cmd = app.add_subcommand("seed", "Load the demo dataset into an empty data directory");
  seed_cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  seed_cmd->add_option("--data-dir", data_dir, "State directory (overrides config)");
  seed_cmd->add_option("--admin-credential", admin_credential,
                       "Credential of the bootstrap admin when the config names none");
  seed_cmd->add_option("--week", week, "ISO week receiving slots, e.g. 2026-W43 (default: current)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = load_config(config_path);
    if (port >= 0) config.port = static_cast<std::uint16_t>(port);
    if (!data_dir.empty()) config.data_dir = data_dir;
    if (serve_cmd->parsed()) return serve(std::move(config));
    return seed(std::move(config), admin_credential, week);
  } catch (const rlab::Error& e) {
    std::cerr << "error: " << rlab::to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
