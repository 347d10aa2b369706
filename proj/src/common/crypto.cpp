#include "rlab/common/crypto.hpp"

#include <charconv>
#include <vector>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include "rlab/common/error.hpp"

namespace rlab::crypto {

namespace {

constexpr std::size_t kSaltBytes = 16;
constexpr std::size_t kHashBytes = 32;

std::string pbkdf2(std::string_view secret, std::string_view salt, unsigned iterations) {
  std::string out(kHashBytes, '\0');
  const int ok = PKCS5_PBKDF2_HMAC(secret.data(), static_cast<int>(secret.size()),
                                   reinterpret_cast<const unsigned char*>(salt.data()),
                                   static_cast<int>(salt.size()), static_cast<int>(iterations),
                                   EVP_sha256(), static_cast<int>(out.size()),
                                   reinterpret_cast<unsigned char*>(out.data()));
  if (ok != 1) {
    throw Error(Errc::InvalidArgument, "PBKDF2 failed");
  }
  return out;
}

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  Digest d{};
  SHA256(data.data(), data.size(), d.data());
  return d;
}

Digest sha256(std::string_view data) { return sha256(as_bytes(data)); }

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(Errc::InvalidArgument, "odd-length hex string");
  }
  std::string out(hex.size() / 2, '\0');
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, value, 16);
    if (ec != std::errc{} || ptr != hex.data() + 2 * i + 2) {
      throw Error(Errc::InvalidArgument, "invalid hex string");
    }
    out[i] = static_cast<char>(value);
  }
  return out;
}

std::string random_token(std::size_t bytes) {
  std::vector<std::uint8_t> buf(bytes);
  if (RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1) {
    throw Error(Errc::InvalidArgument, "RAND_bytes failed");
  }
  return to_hex(buf);
}

std::string hash_credential(std::string_view secret, unsigned iterations) {
  std::string salt(kSaltBytes, '\0');
  if (RAND_bytes(reinterpret_cast<unsigned char*>(salt.data()), static_cast<int>(salt.size())) != 1) {
    throw Error(Errc::InvalidArgument, "RAND_bytes failed");
  }
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + to_hex(as_bytes(salt)) + "$" +
         to_hex(as_bytes(pbkdf2(secret, salt, iterations)));
}

bool verify_credential(std::string_view secret, std::string_view encoded) {
  // pbkdf2-sha256$<iter>$<salt>$<hash>
  const auto p1 = encoded.find('$');
  const auto p2 = encoded.find('$', p1 + 1);
  const auto p3 = encoded.find('$', p2 + 1);
  if (p1 == std::string_view::npos || p2 == std::string_view::npos ||
      p3 == std::string_view::npos || encoded.substr(0, p1) != "pbkdf2-sha256") {
    return false;
  }
  unsigned iterations = 0;
  const auto iter_text = encoded.substr(p1 + 1, p2 - p1 - 1);
  if (std::from_chars(iter_text.data(), iter_text.data() + iter_text.size(), iterations).ec !=
          std::errc{} ||
      iterations == 0) {
    return false;
  }
  try {
    const std::string salt = from_hex(encoded.substr(p2 + 1, p3 - p2 - 1));
    const std::string expected = from_hex(encoded.substr(p3 + 1));
    return constant_time_equal(pbkdf2(secret, salt, iterations), expected);
  } catch (const Error&) {
    return false;
  }
}

bool constant_time_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) {
    return false;
  }
  return CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error(Errc::InvalidArgument, "base64 length not a multiple of 4");
  std::string out(3 * (text.size() / 4), '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw Error(Errc::InvalidArgument, "malformed base64");
  // EVP_DecodeBlock counts padding as zero bytes.
  std::size_t len = static_cast<std::size_t>(n);
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

}  // namespace rlab::crypto
