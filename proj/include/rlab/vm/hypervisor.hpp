#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rlab/common/ids.hpp"

namespace rlab::vm {

using Bytes = std::vector<std::uint8_t>;

struct ProvisionRequest {
  VmId vm;
  SetupId setup;
  std::string base_digest;
  std::shared_ptr<const Bytes> base_content;
};

struct VmProbe {
  bool running = false;
  std::string disk_digest;
};

/// Seam to a hypervisor. Implementations throw Error(DriverFailure).
/// restore_to_base is idempotent and, on success, leaves the disk digest
/// equal to the base digest.
class HypervisorDriver {
 public:
  virtual ~HypervisorDriver() = default;
  /// Creates the VM's disk from the base image; returns its desktop endpoint.
  virtual std::string provision(const ProvisionRequest& request) = 0;
  virtual void start(VmId vm) = 0;
  virtual void stop(VmId vm) = 0;
  /// Returns the disk digest after the restore.
  virtual std::string restore_to_base(VmId vm) = 0;
  virtual VmProbe probe(VmId vm) = 0;
};

/// Content of registered base images, keyed by digest. Optionally mirrored
/// to <dir>/<digest>.img.
class ImageStore {
 public:
  explicit ImageStore(std::optional<std::filesystem::path> dir = std::nullopt);

  void put(const std::string& digest, std::span<const std::uint8_t> content);
  /// nullptr when unknown.
  [[nodiscard]] std::shared_ptr<const Bytes> get(const std::string& digest) const;

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const Bytes>> blobs_;
};

}  // namespace rlab::vm
