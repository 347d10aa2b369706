#include "rlab/gateway/server.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <deque>
#include <iostream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "rlab/relay/protocol.hpp"

namespace rlab::gateway {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

constexpr std::size_t kMaxRequestBody = 32u << 20;
constexpr auto kIdleTimeout = std::chrono::seconds(60);

/// Lets driver threads wake connection strands without racing server
/// shutdown: once closed, wake-ups are dropped instead of posted.
class WakeGate {
 public:
  template <class Executor, class F>
  void post(const Executor& ex, F&& f) {
    std::lock_guard lock(mutex_);
    if (open_) net::post(ex, std::forward<F>(f));
  }
  void close() {
    std::lock_guard lock(mutex_);
    open_ = false;
  }

 private:
  std::mutex mutex_;
  bool open_ = true;
};

struct Shared {
  Api& api;
  std::shared_ptr<WakeGate> gate = std::make_shared<WakeGate>();
  std::atomic<std::size_t> streams{0};
};

class StreamCounter {
 public:
  explicit StreamCounter(Shared& s) : s_(s) { ++s_.streams; }
  ~StreamCounter() { --s_.streams; }
  StreamCounter(const StreamCounter&) = delete;
  StreamCounter& operator=(const StreamCounter&) = delete;

 private:
  Shared& s_;
};

std::string header_map_key(std::string_view name) {
  std::string out(name);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string query_or_empty(const std::map<std::string, std::string>& q, const std::string& key) {
  auto it = q.find(key);
  return it == q.end() ? std::string() : it->second;
}

http::response<http::string_body> make_response(const ApiResponse& r, unsigned version, bool keep_alive) {
  http::response<http::string_body> res{static_cast<http::status>(r.status), version};
  res.set(http::field::server, "rlab");
  res.set(http::field::content_type, r.content_type);
  res.set(http::field::cache_control, "no-store");
  res.keep_alive(keep_alive);
  res.body() = r.body.is_null() ? std::string() : r.body.dump();
  res.prepare_payload();
  return res;
}

/// Second path segment as a session id, e.g. /ws/relay/7 -> 7.
SessionId session_from_path(const std::string& path) {
  const auto parts = split_path(path);
  if (parts.size() != 3) throw Error(Errc::NotFound, "expected /<prefix>/<kind>/<session>");
  std::uint64_t v = 0;
  const auto& s = parts[2];
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size() || v == 0) {
    throw Error(Errc::InvalidArgument, "malformed session id");
  }
  return SessionId{v};
}

// ---------------------------------------------------------------------------

class RelaySocket : public std::enable_shared_from_this<RelaySocket> {
 public:
  RelaySocket(beast::tcp_stream&& stream, Shared& shared, std::shared_ptr<relay::ClientChannel> channel)
      : ws_(std::move(stream)), shared_(shared), counter_(shared), channel_(std::move(channel)) {}

  ~RelaySocket() { finish(); }

  void start(http::request<http::string_body> req) {
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(relay::kMaxPayload + 64);
    ws_.binary(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return finish();
    std::weak_ptr<RelaySocket> weak = shared_from_this();
    auto gate = shared_.gate;
    auto ex = ws_.get_executor();
    channel_->set_notify([weak, gate, ex] {
      gate->post(ex, [weak] {
        if (auto self = weak.lock()) self->pump();
      });
    });
    read();
    pump();
  }

  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->finish();
      const auto data = self->in_.cdata();
      self->shared_.api.platform().relay.handle_client_bytes(
          *self->channel_, std::span(static_cast<const std::uint8_t*>(data.data()), data.size()));
      self->in_.consume(self->in_.size());
      self->read();
    });
  }

  void pump() {
    if (writing_ || closing_ || done_) return;
    auto out = channel_->try_pop();
    if (!out) {
      if (channel_->closed()) close_socket();
      return;
    }
    writing_ = true;
    current_ = out->wire;
    const bool is_close = out->opcode == relay::Opcode::Close;
    ws_.async_write(net::buffer(*current_), [self = shared_from_this(), is_close](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      self->current_.reset();
      if (ec) return self->finish();
      if (is_close) return self->close_socket();
      self->pump();
    });
  }

  void close_socket() {
    if (closing_ || done_) return;
    closing_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) { self->finish(); });
  }

  void finish() {
    if (done_) return;
    done_ = true;
    channel_->set_notify({});
    shared_.api.platform().relay.detach_client(*channel_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Shared& shared_;
  StreamCounter counter_;
  std::shared_ptr<relay::ClientChannel> channel_;
  beast::flat_buffer in_;
  std::shared_ptr<const relay::Bytes> current_;
  bool writing_ = false;
  bool closing_ = false;
  bool done_ = false;
};

// ---------------------------------------------------------------------------

/// Common part of the two event transports: a bus subscription drained in
/// publish order, preceded by a {"type":"ready"} marker.
class EventPump {
 protected:
  EventPump(Shared& shared, collab::Subscription::Filter filter)
      : shared_(shared), sub_(shared.api.platform().bus.subscribe(std::move(filter))) {
    pending_.push_back(Json{{"type", "ready"}}.dump());
  }
  ~EventPump() { shared_.api.platform().bus.unsubscribe(sub_); }

  template <class Self>
  void arm(const std::shared_ptr<Self>& self, const net::any_io_executor& ex) {
    std::weak_ptr<Self> weak = self;
    auto gate = shared_.gate;
    sub_->set_notify([weak, gate, ex] {
      gate->post(ex, [weak] {
        if (auto s = weak.lock()) s->pump();
      });
    });
  }

  /// Next line to send, or nullopt. Sets `ended_` once the subscription was
  /// closed (overflow) and drained.
  std::optional<std::string> next() {
    if (!pending_.empty()) {
      auto s = std::move(pending_.front());
      pending_.pop_front();
      return s;
    }
    if (auto e = sub_->try_pop()) return e->dump();
    if (sub_->closed()) ended_ = true;
    return std::nullopt;
  }

  Shared& shared_;
  std::shared_ptr<collab::Subscription> sub_;
  std::deque<std::string> pending_;
  bool ended_ = false;
};

class EventSocket : public std::enable_shared_from_this<EventSocket>, public EventPump {
 public:
  EventSocket(beast::tcp_stream&& stream, Shared& shared, collab::Subscription::Filter filter)
      : EventPump(shared, std::move(filter)), ws_(std::move(stream)), counter_(shared) {}

  void start(http::request<http::string_body> req) {
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->arm(self, self->ws_.get_executor());
      self->read();
      self->pump();
    });
  }

  void pump() {
    if (writing_ || closing_ || done_) return;
    auto line = next();
    if (!line) {
      if (ended_) close_socket("event stream overflow");
      return;
    }
    writing_ = true;
    current_ = std::move(*line);
    ws_.async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->done_ = true;
        return;
      }
      self->pump();
    });
  }

 private:
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->done_ = true;
        return;
      }
      self->in_.consume(self->in_.size());
      self->read();
    });
  }

  void close_socket(const std::string& reason) {
    closing_ = true;
    ws_.async_close(websocket::close_reason(websocket::close_code::try_again_later, reason),
                    [self = shared_from_this()](beast::error_code) { self->done_ = true; });
  }

  websocket::stream<beast::tcp_stream> ws_;
  StreamCounter counter_;
  beast::flat_buffer in_;
  std::string current_;
  bool writing_ = false;
  bool closing_ = false;
  bool done_ = false;
};

// ---------------------------------------------------------------------------

/// Chunked HTTP response body written piecewise.
class ChunkedResponse {
 protected:
  ChunkedResponse(beast::tcp_stream&& stream, unsigned version, std::string content_type)
      : stream_(std::move(stream)), res_(http::status::ok, version) {
    res_.set(http::field::server, "rlab");
    res_.set(http::field::content_type, content_type);
    res_.set(http::field::cache_control, "no-store");
    res_.keep_alive(false);
    res_.chunked(true);
    serializer_.emplace(res_);
    stream_.expires_never();
  }

  template <class Self, class F>
  void write_header(const std::shared_ptr<Self>& self, F&& then) {
    http::async_write_header(stream_, *serializer_,
                             [self, then = std::forward<F>(then)](beast::error_code ec, std::size_t) { then(ec); });
    // A read that only completes on EOF or error tells us the client left.
    stream_.async_read_some(net::buffer(sink_), [self](beast::error_code ec, std::size_t) {
      if (ec) self->client_gone();
    });
  }

  template <class Self, class F>
  void write_chunk(const std::shared_ptr<Self>& self, std::string data, F&& then) {
    chunk_ = std::move(data);
    net::async_write(stream_, http::make_chunk(net::buffer(chunk_)),
                     [self, then = std::forward<F>(then)](beast::error_code ec, std::size_t) { then(ec); });
  }

  template <class Self>
  void write_last(const std::shared_ptr<Self>& self) {
    net::async_write(stream_, http::make_chunk_last(), [self](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  virtual ~ChunkedResponse() = default;

 public:
  virtual void client_gone() = 0;

 protected:

  beast::tcp_stream stream_;
  http::response<http::empty_body> res_;
  std::optional<http::response_serializer<http::empty_body>> serializer_;
  std::string chunk_;
  std::array<char, 64> sink_{};
};

class EventLines : public std::enable_shared_from_this<EventLines>, public ChunkedResponse, public EventPump {
 public:
  EventLines(beast::tcp_stream&& stream, unsigned version, Shared& shared, collab::Subscription::Filter filter)
      : ChunkedResponse(std::move(stream), version, "application/x-ndjson"),
        EventPump(shared, std::move(filter)),
        counter_(shared) {}

  void start() {
    auto self = shared_from_this();
    arm(self, stream_.get_executor());
    writing_ = true;
    write_header(self, [self](beast::error_code ec) {
      self->writing_ = false;
      if (ec) {
        self->done_ = true;
        return;
      }
      self->pump();
    });
  }

  void pump() {
    if (writing_ || done_) return;
    auto line = next();
    if (!line) {
      if (ended_) {
        done_ = true;
        write_last(shared_from_this());
      }
      return;
    }
    writing_ = true;
    write_chunk(shared_from_this(), *line + "\n", [self = shared_from_this()](beast::error_code ec) {
      self->writing_ = false;
      if (ec) {
        self->done_ = true;
        return;
      }
      self->pump();
    });
  }

  void client_gone() override {
    done_ = true;
    sub_->close();
    beast::error_code ignored;
    stream_.socket().close(ignored);
  }

  StreamCounter counter_;
  bool writing_ = false;
  bool done_ = false;
};

class CameraFeed : public std::enable_shared_from_this<CameraFeed>, public ChunkedResponse {
 public:
  static constexpr const char* kBoundary = "frame";

  CameraFeed(beast::tcp_stream&& stream, unsigned version, Shared& shared, SessionId session, std::string token,
             SetupId setup, std::optional<std::uint64_t> max_frames)
      : ChunkedResponse(std::move(stream), version, std::string("multipart/x-mixed-replace; boundary=") + kBoundary),
        shared_(shared),
        counter_(shared),
        session_(session),
        token_(std::move(token)),
        setup_(setup),
        max_frames_(max_frames),
        timer_(stream_.get_executor()) {}

  void start() {
    auto self = shared_from_this();
    write_header(self, [self](beast::error_code ec) {
      if (ec) return;
      self->send_frame();
    });
  }

 private:
  void send_frame() {
    if (done_) return;
    bool still_valid = true;
    try {
      shared_.api.camera_setup(session_, token_);
    } catch (const Error&) {
      still_valid = false;
    }
    if (!still_valid || (max_frames_ && sent_ >= *max_frames_)) return end();
    auto& cam = shared_.api.platform().camera(setup_);
    const auto frame = cam.next_frame();
    std::string part = std::string("--") + kBoundary + "\r\nContent-Type: " + frame.content_type +
                       "\r\nContent-Length: " + std::to_string(frame.data.size()) +
                       "\r\nX-Frame-Seq: " + std::to_string(frame.seq) +
                       "\r\nX-Frame-Time: " + std::to_string(frame.at.time_since_epoch().count()) + "\r\n\r\n";
    part.append(reinterpret_cast<const char*>(frame.data.data()), frame.data.size());
    part += "\r\n";
    ++sent_;
    const auto period = std::chrono::microseconds(static_cast<std::int64_t>(1e6 / cam.fps()));
    write_chunk(shared_from_this(), std::move(part), [self = shared_from_this(), period](beast::error_code ec) {
      if (ec) {
        self->done_ = true;
        return;
      }
      self->timer_.expires_after(period);
      self->timer_.async_wait([self](beast::error_code ec) {
        if (!ec) self->send_frame();
      });
    });
  }

  void end() {
    done_ = true;
    auto self = shared_from_this();
    write_chunk(self, std::string("--") + kBoundary + "--\r\n", [self](beast::error_code ec) {
      if (!ec) self->write_last(self);
    });
  }


 public:
  void client_gone() override {
    done_ = true;
    timer_.cancel();
  }

 private:
  Shared& shared_;
  StreamCounter counter_;
  SessionId session_;
  std::string token_;
  SetupId setup_;
  std::optional<std::uint64_t> max_frames_;
  net::steady_timer timer_;
  std::uint64_t sent_ = 0;
  bool done_ = false;
};

// ---------------------------------------------------------------------------

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Shared& shared) : stream_(std::move(socket)), shared_(shared) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
  }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(kMaxRequestBody);
    stream_.expires_after(kIdleTimeout);
    http::async_read(stream_, buffer_, *parser_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) return shutdown();
    if (ec == http::error::body_limit) {
      return reply(make_response(error_response(Error(Errc::BodyTooLarge, "request body too large")), 11, false));
    }
    if (ec) return;
    auto req = parser_->release();
    try {
      dispatch(std::move(req));
    } catch (const Error& e) {
      reply(make_response(error_response(e), req.version(), req.keep_alive()));
    } catch (const std::exception& e) {
      reply(make_response({500, Json{{"error", "Internal"}, {"message", e.what()}}}, req.version(), false));
    }
  }

  void dispatch(http::request<http::string_body>&& req) {
    auto [path, query] = parse_target(std::string_view(req.target().data(), req.target().size()));
    const auto route = shared_.api.routes().route(path);
    const bool is_get = req.method() == http::verb::get;
    const auto token = query_or_empty(query, "token");
    auto& platform = shared_.api.platform();

    if (route && route->route->component == Component::RdRelay) {
      if (!websocket::is_upgrade(req)) throw Error(Errc::InvalidArgument, "relay requires a WebSocket upgrade");
      auto channel = platform.relay.attach_client(session_from_path(path), token);
      std::make_shared<RelaySocket>(std::move(stream_), shared_, std::move(channel))->start(std::move(req));
      return;
    }
    if (route && path == "/ws/events" && is_get) {
      std::string bearer = token;
      if (bearer.empty()) {
        auto it = req.find(http::field::authorization);
        if (it != req.end() && it->value().starts_with("Bearer ")) bearer = std::string(it->value().substr(7));
      }
      const auto auth = platform.auth.resolve(bearer, platform.clock.now());
      auto filter = shared_.api.event_filter(auth.user);
      if (websocket::is_upgrade(req)) {
        std::make_shared<EventSocket>(std::move(stream_), shared_, std::move(filter))->start(std::move(req));
      } else {
        std::make_shared<EventLines>(std::move(stream_), req.version(), shared_, std::move(filter))->start();
      }
      return;
    }
    if (route && path.starts_with("/stream/camera/") && is_get) {
      const auto session = session_from_path(path);
      const auto setup = shared_.api.camera_setup(session, token);
      std::optional<std::uint64_t> frames;
      if (auto it = query.find("frames"); it != query.end()) frames = std::stoull(it->second);
      std::make_shared<CameraFeed>(std::move(stream_), req.version(), shared_, session, token, setup, frames)->start();
      return;
    }

    ApiRequest ar;
    ar.method = std::string(req.method_string());
    ar.path = std::move(path);
    ar.query = std::move(query);
    for (const auto& h : req) ar.headers[header_map_key(std::string_view(h.name_string().data(), h.name_string().size()))] = std::string(h.value());
    ar.body = std::move(req.body());
    reply(make_response(shared_.api.handle(ar), req.version(), req.keep_alive()));
  }

  void reply(http::response<http::string_body>&& res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!sp->keep_alive()) return self->shutdown();
      self->read();
    });
  }

  void shutdown() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  Shared& shared_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
};

}  // namespace

struct HttpServer::Impl {
  Impl(Api& api, std::string h, std::uint16_t p, unsigned t)
      : shared{api}, host(std::move(h)), port(p), threads(std::max(1u, t)) {}

  void accept() {
    acceptor->async_accept(net::make_strand(*ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted || !acceptor->is_open()) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), shared)->run();
      }
      accept();
    });
  }

  Shared shared;
  std::string host;
  std::uint16_t port;
  unsigned threads;
  std::optional<net::io_context> ioc;
  std::optional<tcp::acceptor> acceptor;
  std::vector<std::thread> workers;
  bool running = false;
};

HttpServer::HttpServer(Api& api, std::string host, std::uint16_t port, unsigned threads)
    : impl_(std::make_unique<Impl>(api, std::move(host), port, threads)) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
  if (impl_->running) return;
  impl_->ioc.emplace();
  const tcp::endpoint ep{net::ip::make_address(impl_->host), impl_->port};
  impl_->acceptor.emplace(*impl_->ioc);
  impl_->acceptor->open(ep.protocol());
  impl_->acceptor->set_option(net::socket_base::reuse_address(true));
  impl_->acceptor->bind(ep);
  impl_->acceptor->listen(net::socket_base::max_listen_connections);
  impl_->port = impl_->acceptor->local_endpoint().port();
  impl_->running = true;
  impl_->accept();
  for (unsigned i = 0; i < impl_->threads; ++i) {
    impl_->workers.emplace_back([this] {
      for (;;) {
        try {
          impl_->ioc->run();
          return;
        } catch (const std::exception& e) {
          std::cerr << "server handler failed: " << e.what() << '\n';
        }
      }
    });
  }
}

void HttpServer::stop() {
  if (!impl_->running) return;
  impl_->running = false;
  impl_->shared.gate->close();
  impl_->ioc->stop();
  for (auto& t : impl_->workers) t.join();
  impl_->workers.clear();
  impl_->acceptor.reset();
  // Destroying the context destroys pending handlers and with them every
  // open connection.
  impl_->ioc.reset();
}

std::uint16_t HttpServer::port() const { return impl_->port; }

std::size_t HttpServer::open_streams() const { return impl_->shared.streams.load(); }

}  // namespace rlab::gateway
