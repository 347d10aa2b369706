#include "rlab/relay/relay.hpp"

#include "rlab/common/error.hpp"

namespace rlab::relay {

Relay::Relay(RelayConfig config, UpstreamConnector connector)
    : config_(config), connector_(connector ? std::move(connector) : tcp_connector(config.connect_timeout)) {}

Relay::~Relay() {
  std::vector<SessionId> ids;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, entry] : sessions_) ids.push_back(id);
  }
  for (const auto id : ids) close_session_channels(id);
}

void Relay::set_token_validator(TokenValidator validator) {
  std::lock_guard lock(mutex_);
  validator_ = std::move(validator);
}

void Relay::set_upstream_lost_handler(std::function<void(SessionId, const std::string&)> handler) {
  std::lock_guard lock(mutex_);
  on_lost_ = std::move(handler);
}

std::shared_ptr<Relay::SessionEntry> Relay::find(SessionId session) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session);
  return it == sessions_.end() ? nullptr : it->second;
}

void Relay::open_upstream(SessionId session, const std::string& endpoint) {
  auto entry = std::make_shared<SessionEntry>();
  entry->id = session;
  {
    std::lock_guard lock(mutex_);
    if (sessions_.contains(session)) {
      throw Error(Errc::DuplicateUpstream, "session " + session.str() + " already has an upstream");
    }
    sessions_.emplace(session, entry);
  }
  std::weak_ptr<SessionEntry> weak = entry;
  auto on_frame = [this, session](const FrameUpdate& frame) { broadcast_frame(session, frame); };
  auto on_lost = [this, session, weak](const std::string& reason) {
    if (auto e = weak.lock()) {
      std::lock_guard lock(e->mutex);
      e->ready = false;
    }
    std::function<void(SessionId, const std::string&)> handler;
    {
      std::lock_guard lock(mutex_);
      handler = on_lost_;
    }
    if (handler) handler(session, reason);
  };
  std::unique_ptr<Upstream> upstream;
  try {
    upstream = connector_(endpoint, on_frame, on_lost);
  } catch (const Error& e) {
    std::lock_guard lock(mutex_);
    sessions_.erase(session);
    if (e.code() == Errc::ConnectFailed) throw;
    throw Error(Errc::ConnectFailed, e.what());
  }
  std::lock_guard lock(entry->mutex);
  entry->upstream = std::move(upstream);
  entry->ready = entry->upstream->live();
}

std::shared_ptr<ClientChannel> Relay::attach_client(SessionId session, const std::string& token) {
  TokenValidator validator;
  {
    std::lock_guard lock(mutex_);
    validator = validator_;
  }
  const auto user = validator ? validator(session, token) : std::nullopt;
  if (!user) throw Error(Errc::TokenInvalid, "token not valid for session " + session.str());
  const auto entry = find(session);
  if (!entry) throw Error(Errc::NoUpstream, "no upstream for session " + session.str());
  std::uint64_t id = 0;
  {
    std::lock_guard lock(mutex_);
    id = next_channel_++;
  }
  auto channel = std::make_shared<ClientChannel>(id, session, *user, config_.client_queue_frames);
  std::lock_guard lock(entry->mutex);
  if (!entry->ready) throw Error(Errc::NoUpstream, "upstream for session " + session.str() + " is down");
  entry->clients.emplace(id, channel);
  if (entry->latest_frame) channel->push_frame(entry->latest_frame_id, entry->latest_frame);
  return channel;
}

void Relay::detach_client(ClientChannel& channel) {
  if (const auto entry = find(channel.session())) {
    std::lock_guard lock(entry->mutex);
    entry->clients.erase(channel.id());
  }
  channel.close();
}

std::uint64_t Relay::submit_input(ClientChannel& channel, InputEvent event) {
  if (channel.closed()) throw Error(Errc::ChannelClosed, "client channel closed");
  const auto entry = find(channel.session());
  if (!entry) throw Error(Errc::ChannelClosed, "session channels closed");
  std::shared_ptr<Upstream> upstream;
  {
    std::lock_guard lock(entry->mutex);
    if (!entry->clients.contains(channel.id())) throw Error(Errc::ChannelClosed, "client detached");
    upstream = entry->upstream;
  }
  if (!upstream) throw Error(Errc::ChannelClosed, "upstream not connected");

  std::lock_guard merge(entry->merge_mutex);
  if (event.client_seq != channel.last_client_seq + 1) {
    throw Error(Errc::StaleSequence, "expected client_seq " + std::to_string(channel.last_client_seq + 1) +
                                         ", got " + std::to_string(event.client_seq));
  }
  const std::uint64_t relay_seq = entry->next_relay_seq;
  InputEvent forwarded = event;
  // The desktop sees one totally ordered stream, numbered by relay_seq.
  forwarded.client_seq = static_cast<std::uint32_t>(relay_seq);
  if (!upstream->send(input_message(forwarded))) {
    throw Error(Errc::ChannelClosed, "upstream connection lost");
  }
  entry->next_relay_seq = relay_seq + 1;
  channel.last_client_seq = event.client_seq;
  channel.push_control(Message{Opcode::Seq, encode_ack(Ack{relay_seq, event.client_seq})});
  return relay_seq;
}

std::size_t Relay::broadcast_frame(SessionId session, const FrameUpdate& frame) {
  const auto entry = find(session);
  if (!entry) return 0;
  auto wire = std::make_shared<const Bytes>(encode(frame_message(frame)));
  std::lock_guard lock(entry->mutex);
  if (frame.frame_id <= entry->latest_frame_id) return 0;
  entry->latest_frame_id = frame.frame_id;
  entry->latest_frame = wire;
  std::size_t delivered = 0;
  for (const auto& [id, client] : entry->clients) {
    if (client->push_frame(frame.frame_id, wire)) ++delivered;
  }
  return delivered;
}

void Relay::close_session_channels(SessionId session) {
  std::shared_ptr<SessionEntry> entry;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(session);
    if (it == sessions_.end()) return;
    entry = it->second;
    sessions_.erase(it);
  }
  std::shared_ptr<Upstream> upstream;
  {
    std::lock_guard lock(entry->mutex);
    for (const auto& [id, client] : entry->clients) client->close("session ended");
    entry->clients.clear();
    entry->ready = false;
    upstream = std::move(entry->upstream);
  }
  // Joins the reader thread, so no entry lock may be held here.
  if (upstream) upstream->close();
}

bool Relay::handle_client_bytes(ClientChannel& channel, std::span<const std::uint8_t> bytes) {
  std::lock_guard inbound(channel.inbound_mutex);
  if (channel.closed()) return false;
  try {
    channel.decoder.feed(bytes);
    while (auto message = channel.decoder.next()) {
      switch (message->opcode) {
        case Opcode::Input:
          submit_input(channel, decode_input(message->payload));
          break;
        case Opcode::Ping:
          channel.push_control(Message{Opcode::Pong, message->payload});
          break;
        case Opcode::Pong:
          break;
        case Opcode::Close:
          detach_client(channel);
          return false;
        case Opcode::Frame:
        case Opcode::Seq:
          throw Error(Errc::ProtocolError, "opcode not allowed from a client");
      }
    }
  } catch (const Error& e) {
    if (const auto entry = find(channel.session())) {
      std::lock_guard lock(entry->mutex);
      entry->clients.erase(channel.id());
    }
    channel.close(std::string(to_string(e.code())) + ": " + e.what());
    return false;
  }
  return true;
}

bool Relay::has_upstream(SessionId session) const {
  const auto entry = find(session);
  if (!entry) return false;
  std::lock_guard lock(entry->mutex);
  return entry->ready;
}

std::optional<std::uint64_t> Relay::latest_frame_id(SessionId session) const {
  const auto entry = find(session);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mutex);
  if (!entry->latest_frame) return std::nullopt;
  return entry->latest_frame_id;
}

RelayCensus Relay::census() const {
  std::vector<std::shared_ptr<SessionEntry>> entries;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  RelayCensus c;
  c.sessions = entries.size();
  for (const auto& e : entries) {
    std::lock_guard lock(e->mutex);
    if (e->ready) ++c.live_upstreams;
    c.clients += e->clients.size();
  }
  return c;
}

}  // namespace rlab::relay
