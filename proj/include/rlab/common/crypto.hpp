#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace rlab::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Throws Error(InvalidArgument) on odd length or non-hex characters.
std::string from_hex(std::string_view hex);

/// Hex string of `bytes` cryptographically random bytes.
std::string random_token(std::size_t bytes = 32);

/// Salted PBKDF2-HMAC-SHA256, encoded as "pbkdf2-sha256$<iter>$<salt>$<hash>".
std::string hash_credential(std::string_view secret, unsigned iterations);
/// Recomputes with the stored salt and compares in constant time.
bool verify_credential(std::string_view secret, std::string_view encoded);

bool constant_time_equal(std::string_view a, std::string_view b);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Error(InvalidArgument) for malformed input.
std::string base64_decode(std::string_view text);

}  // namespace rlab::crypto
