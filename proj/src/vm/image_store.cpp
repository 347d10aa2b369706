#include "rlab/vm/hypervisor.hpp"

#include <fstream>
#include <iterator>

#include "rlab/common/error.hpp"

namespace rlab::vm {

ImageStore::ImageStore(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) {
    std::filesystem::create_directories(*dir_);
  }
}

void ImageStore::put(const std::string& digest, std::span<const std::uint8_t> content) {
  auto blob = std::make_shared<const Bytes>(content.begin(), content.end());
  if (dir_) {
    std::ofstream out(*dir_ / (digest + ".img"), std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(blob->data()), static_cast<std::streamsize>(blob->size()));
    if (!out) {
      throw Error(Errc::StorageFailure, "cannot store image " + digest);
    }
  }
  std::lock_guard lock(mutex_);
  blobs_[digest] = std::move(blob);
}

std::shared_ptr<const Bytes> ImageStore::get(const std::string& digest) const {
  std::lock_guard lock(mutex_);
  if (const auto it = blobs_.find(digest); it != blobs_.end()) {
    return it->second;
  }
  if (!dir_) {
    return nullptr;
  }
  std::ifstream in(*dir_ / (digest + ".img"), std::ios::binary);
  if (!in) {
    return nullptr;
  }
  auto blob = std::make_shared<const Bytes>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  blobs_[digest] = blob;
  return blob;
}

}  // namespace rlab::vm
