#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "rlab/common/ids.hpp"
#include "rlab/common/time.hpp"
#include "rlab/domain/entities.hpp"

namespace rlab::collab {

/// Manages conference room lifecycle only; media is external.
class ConferenceAdapter {
 public:
  virtual ~ConferenceAdapter() = default;
  /// Throws AdapterFailure.
  virtual std::string create_room(SessionId session) = 0;
  virtual void destroy_room(const std::string& room) = 0;
  [[nodiscard]] virtual std::string join_url(const std::string& room) const = 0;
};

using MilliTime = std::chrono::sys_time<std::chrono::milliseconds>;

struct CameraFrame {
  std::uint64_t seq = 0;
  MilliTime at{};
  std::string content_type;
  std::vector<std::uint8_t> data;
};

/// Successive frames have non-decreasing timestamps.
class CameraSource {
 public:
  virtual ~CameraSource() = default;
  virtual CameraFrame next_frame() = 0;
  [[nodiscard]] virtual double fps() const = 0;
};

/// Sensor and actuator access for one installation. Throws DriverFailure.
class HardwareDriver {
 public:
  virtual ~HardwareDriver() = default;
  /// Current value of a sensor, or the latched value of an actuator.
  virtual ChannelValue read(SetupId setup, const ChannelDescriptor& channel, TimePoint at) = 0;
  /// Applies an already validated value and returns what the device reports.
  virtual ChannelValue write(SetupId setup, const ChannelDescriptor& channel, const ChannelValue& value) = 0;
};

}  // namespace rlab::collab
