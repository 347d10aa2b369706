#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>

#include "rlab/collab/adapters.hpp"
#include "rlab/sim/fault_plan.hpp"

namespace rlab::sim {

/// Room ids are "<prefix>-<n>" with n counting from 1; the prefix is derived
/// from the seed. Operations: create_room, destroy_room.
class SimConference final : public collab::ConferenceAdapter {
 public:
  explicit SimConference(std::uint64_t seed = 1, FaultPlan plan = {}, CallLog* calls = nullptr,
                         std::string base_url = "https://meet.example.invalid/");

  std::string create_room(SessionId session) override;
  void destroy_room(const std::string& room) override;
  [[nodiscard]] std::string join_url(const std::string& room) const override;

  [[nodiscard]] std::set<std::string> live_rooms() const;
  [[nodiscard]] std::size_t created() const;
  [[nodiscard]] std::size_t destroyed() const;
  FaultPlan& faults() { return plan_; }

 private:
  std::string prefix_;
  FaultPlan plan_;
  CallLog* calls_;
  std::string base_url_;
  mutable std::mutex mutex_;
  std::uint64_t next_ = 1;
  std::set<std::string> live_;
  std::size_t created_ = 0;
  std::size_t destroyed_ = 0;
};

/// Synthetic binary PPM images. Frame n is stamped origin + n / fps where
/// the origin is the clock reading at construction.
class SimCamera final : public collab::CameraSource {
 public:
  SimCamera(const Clock& clock, double fps = 2.0, std::uint16_t width = 160, std::uint16_t height = 120,
            std::string label = "camera");

  collab::CameraFrame next_frame() override;
  [[nodiscard]] double fps() const override { return fps_; }

 private:
  double fps_;
  std::uint16_t width_;
  std::uint16_t height_;
  std::string label_;
  collab::MilliTime origin_;
  std::mutex mutex_;
  std::uint64_t next_seq_ = 0;
};

/// Sensors follow a seeded sine wave inside their bounds; actuators latch
/// the last written value. Operations: read, write.
class SimHardware final : public collab::HardwareDriver {
 public:
  explicit SimHardware(std::uint64_t seed = 1, FaultPlan plan = {}, CallLog* calls = nullptr,
                       double period_seconds = 60.0);

  ChannelValue read(SetupId setup, const ChannelDescriptor& channel, TimePoint at) override;
  ChannelValue write(SetupId setup, const ChannelDescriptor& channel, const ChannelValue& value) override;

  /// Waveform value of a sensor without touching the call log.
  [[nodiscard]] ChannelValue sample(SetupId setup, const ChannelDescriptor& channel, TimePoint at) const;
  [[nodiscard]] std::vector<std::pair<std::string, ChannelValue>> write_log() const;

 private:
  [[nodiscard]] double phase(SetupId setup, const std::string& channel_id) const;

  std::uint64_t seed_;
  FaultPlan plan_;
  CallLog* calls_;
  double period_;
  mutable std::mutex mutex_;
  std::map<std::pair<SetupId, std::string>, ChannelValue> latched_;
  std::vector<std::pair<std::string, ChannelValue>> writes_;
};

/// Binary PPM (P6) encoding of RGB pixels.
std::vector<std::uint8_t> encode_ppm(std::uint16_t width, std::uint16_t height,
                                     const std::vector<std::uint8_t>& rgb);

}  // namespace rlab::sim
