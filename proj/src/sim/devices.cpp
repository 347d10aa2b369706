#include "rlab/sim/devices.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rlab/common/crypto.hpp"
#include "rlab/common/error.hpp"

namespace rlab::sim {

SimConference::SimConference(std::uint64_t seed, FaultPlan plan, CallLog* calls, std::string base_url)
    : prefix_("room" + crypto::to_hex(crypto::sha256("conference-" + std::to_string(seed))).substr(0, 6)),
      plan_(std::move(plan)),
      calls_(calls),
      base_url_(std::move(base_url)) {}

std::string SimConference::create_room(SessionId session) {
  std::lock_guard lock(mutex_);
  if (calls_) calls_->record("conference", "create_room", session.str());
  if (plan_.next_call_fails("create_room")) {
    throw Error(Errc::AdapterFailure, "conference service refused to create a room");
  }
  auto room = prefix_ + "-" + std::to_string(next_++);
  live_.insert(room);
  ++created_;
  return room;
}

void SimConference::destroy_room(const std::string& room) {
  std::lock_guard lock(mutex_);
  if (calls_) calls_->record("conference", "destroy_room", room);
  if (plan_.next_call_fails("destroy_room")) {
    throw Error(Errc::AdapterFailure, "conference service refused to destroy " + room);
  }
  if (live_.erase(room) != 0) ++destroyed_;
}

std::string SimConference::join_url(const std::string& room) const { return base_url_ + room; }

std::set<std::string> SimConference::live_rooms() const {
  std::lock_guard lock(mutex_);
  return live_;
}

std::size_t SimConference::created() const {
  std::lock_guard lock(mutex_);
  return created_;
}

std::size_t SimConference::destroyed() const {
  std::lock_guard lock(mutex_);
  return destroyed_;
}

std::vector<std::uint8_t> encode_ppm(std::uint16_t width, std::uint16_t height,
                                     const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != std::size_t{width} * height * 3) {
    throw Error(Errc::InvalidArgument, "pixel buffer does not match dimensions");
  }
  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), rgb.begin(), rgb.end());
  return out;
}

SimCamera::SimCamera(const Clock& clock, double fps, std::uint16_t width, std::uint16_t height,
                     std::string label)
    : fps_(fps), width_(width), height_(height), label_(std::move(label)) {
  if (fps <= 0 || width == 0 || height == 0) {
    throw Error(Errc::InvalidArgument, "camera needs positive fps and dimensions");
  }
  origin_ = std::chrono::time_point_cast<std::chrono::milliseconds>(clock.now());
}

collab::CameraFrame SimCamera::next_frame() {
  std::uint64_t seq = 0;
  {
    std::lock_guard lock(mutex_);
    seq = next_seq_++;
  }
  collab::CameraFrame frame;
  frame.seq = seq;
  frame.at = origin_ + std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(seq * 1000.0 / fps_)));
  frame.content_type = "image/x-portable-pixmap";
  // Bench-like gradient with a bar sweeping across as time passes.
  std::vector<std::uint8_t> rgb(std::size_t{width_} * height_ * 3);
  const std::size_t bar = seq % width_;
  for (std::size_t y = 0; y < height_; ++y) {
    for (std::size_t x = 0; x < width_; ++x) {
      const std::size_t i = (y * width_ + x) * 3;
      const bool on_bar = x == bar;
      rgb[i] = on_bar ? 255 : static_cast<std::uint8_t>(x * 255 / width_);
      rgb[i + 1] = on_bar ? 64 : static_cast<std::uint8_t>(y * 255 / height_);
      rgb[i + 2] = on_bar ? 64 : 96;
    }
  }
  frame.data = encode_ppm(width_, height_, rgb);
  return frame;
}

SimHardware::SimHardware(std::uint64_t seed, FaultPlan plan, CallLog* calls, double period_seconds)
    : seed_(seed), plan_(std::move(plan)), calls_(calls), period_(period_seconds) {
  if (period_seconds <= 0) throw Error(Errc::InvalidArgument, "waveform period must be positive");
}

double SimHardware::phase(SetupId setup, const std::string& channel_id) const {
  const auto d = crypto::sha256(std::to_string(seed_) + "/" + setup.str() + "/" + channel_id);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
  return 2.0 * std::numbers::pi * (v / 4294967296.0);
}

ChannelValue SimHardware::sample(SetupId setup, const ChannelDescriptor& channel, TimePoint at) const {
  // Reduced first so large epoch values keep full precision.
  const double t = std::fmod(static_cast<double>(at.time_since_epoch().count()), period_);
  const double s = std::sin(2.0 * std::numbers::pi * t / period_ + phase(setup, channel.channel_id));
  if (channel.datatype == ChannelDatatype::Bool) return s > 0;
  const double mid = (channel.min + channel.max) / 2.0;
  const double amplitude = (channel.max - channel.min) / 2.0 * 0.9;
  return std::clamp(mid + amplitude * s, channel.min, channel.max);
}

ChannelValue SimHardware::read(SetupId setup, const ChannelDescriptor& channel, TimePoint at) {
  std::lock_guard lock(mutex_);
  if (calls_) calls_->record("hardware", "read", setup.str() + "/" + channel.channel_id);
  if (plan_.next_call_fails("read")) throw Error(Errc::DriverFailure, "sensor bus timeout");
  if (channel.kind == ChannelKind::Actuator) {
    const auto it = latched_.find({setup, channel.channel_id});
    if (it != latched_.end()) return it->second;
    return channel.datatype == ChannelDatatype::Bool ? ChannelValue{false} : ChannelValue{channel.min};
  }
  return sample(setup, channel, at);
}

ChannelValue SimHardware::write(SetupId setup, const ChannelDescriptor& channel, const ChannelValue& value) {
  std::lock_guard lock(mutex_);
  if (calls_) calls_->record("hardware", "write", setup.str() + "/" + channel.channel_id);
  if (plan_.next_call_fails("write")) throw Error(Errc::DriverFailure, "actuator did not acknowledge");
  latched_[{setup, channel.channel_id}] = value;
  writes_.emplace_back(setup.str() + "/" + channel.channel_id, value);
  return value;
}

std::vector<std::pair<std::string, ChannelValue>> SimHardware::write_log() const {
  std::lock_guard lock(mutex_);
  return writes_;
}

}  // namespace rlab::sim
