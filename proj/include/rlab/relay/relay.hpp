#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "rlab/common/ids.hpp"
#include "rlab/relay/channel.hpp"
#include "rlab/relay/protocol.hpp"
#include "rlab/relay/upstream.hpp"

namespace rlab::relay {

struct RelayConfig {
  std::size_t client_queue_frames = 8;
  std::chrono::milliseconds connect_timeout{2000};
};

/// Resolves a participant token to its user when it is valid for the session.
using TokenValidator = std::function<std::optional<UserId>(SessionId, const std::string& token)>;

struct RelayCensus {
  std::size_t sessions = 0;
  std::size_t live_upstreams = 0;
  std::size_t clients = 0;
};

/// One upstream desktop connection per session fanned out to any number of
/// client channels. Inputs from all clients of a session pass through one
/// merge point that assigns relay_seq and forwards in that order.
class Relay {
 public:
  explicit Relay(RelayConfig config = {}, UpstreamConnector connector = {});
  ~Relay();
  Relay(const Relay&) = delete;
  Relay& operator=(const Relay&) = delete;

  void set_token_validator(TokenValidator validator);
  /// Called from the upstream reader thread when a live upstream drops.
  void set_upstream_lost_handler(std::function<void(SessionId, const std::string&)> handler);

  /// Throws DuplicateUpstream or ConnectFailed.
  void open_upstream(SessionId session, const std::string& endpoint);
  /// Throws TokenInvalid or NoUpstream. The latest frame, if any, is queued
  /// on the new channel right away.
  std::shared_ptr<ClientChannel> attach_client(SessionId session, const std::string& token);
  void detach_client(ClientChannel& channel);

  /// Returns the assigned relay_seq. Throws StaleSequence or ChannelClosed.
  std::uint64_t submit_input(ClientChannel& channel, InputEvent event);
  /// Returns how many clients queued the frame. Frames not newer than the
  /// last broadcast one are ignored.
  std::size_t broadcast_frame(SessionId session, const FrameUpdate& frame);
  /// Sends Close to every client and the upstream. Idempotent.
  void close_session_channels(SessionId session);

  /// Feeds raw bytes received from a client connection. Framing errors,
  /// stale inputs and client Close close only this channel. Returns whether
  /// the channel is still open.
  bool handle_client_bytes(ClientChannel& channel, std::span<const std::uint8_t> bytes);

  [[nodiscard]] bool has_upstream(SessionId session) const;
  [[nodiscard]] std::optional<std::uint64_t> latest_frame_id(SessionId session) const;
  [[nodiscard]] RelayCensus census() const;

 private:
  struct SessionEntry {
    SessionId id;
    std::shared_ptr<Upstream> upstream;
    bool ready = false;
    std::mutex merge_mutex;
    std::uint64_t next_relay_seq = 1;
    mutable std::mutex mutex;
    std::uint64_t latest_frame_id = 0;
    std::shared_ptr<const Bytes> latest_frame;
    std::map<std::uint64_t, std::shared_ptr<ClientChannel>> clients;
  };

  std::shared_ptr<SessionEntry> find(SessionId session) const;

  RelayConfig config_;
  UpstreamConnector connector_;
  TokenValidator validator_;
  std::function<void(SessionId, const std::string&)> on_lost_;

  mutable std::mutex mutex_;
  std::map<SessionId, std::shared_ptr<SessionEntry>> sessions_;
  std::uint64_t next_channel_ = 1;
};

}  // namespace rlab::relay
