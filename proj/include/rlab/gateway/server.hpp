#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rlab/gateway/api.hpp"

namespace rlab::gateway {

/// HTTP/1.1 front end: JSON API with keep-alive, WebSocket upgrades for the
/// relay (/ws/relay/{session}?token=) and the event push (/ws/events?token=),
/// chunked NDJSON events for non-upgrade GET /ws/events, and a multipart
/// camera stream (/stream/camera/{session}?token=).
class HttpServer {
 public:
  HttpServer(Api& api, std::string host, std::uint16_t port, unsigned threads = 4);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and starts the worker threads; port 0 picks a free port.
  void start();
  void stop();
  [[nodiscard]] std::uint16_t port() const;
  /// Open relay, event and camera streams.
  [[nodiscard]] std::size_t open_streams() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rlab::gateway
