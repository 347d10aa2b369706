#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace rlab::relay {

using Bytes = std::vector<std::uint8_t>;

enum class Opcode : std::uint8_t {
  Frame = 0x01,
  Input = 0x02,
  Ping = 0x03,
  Pong = 0x04,
  Close = 0x05,
  Seq = 0x06,
};

/// Wire framing: [opcode:1][length:4 BE][payload].
struct Message {
  Opcode opcode = Opcode::Ping;
  Bytes payload;
};

inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::uint32_t kMaxPayload = 16u << 20;

Bytes encode(const Message& message);
Message decode_one(std::span<const std::uint8_t> wire);

/// Incremental decoder for a byte stream. Throws ProtocolError on an unknown
/// opcode or an oversized length; after that the decoder stays poisoned.
class StreamDecoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<Message> next();
  [[nodiscard]] std::size_t buffered() const { return buffer_.size(); }
  [[nodiscard]] bool failed() const { return failed_; }

 private:
  std::deque<std::uint8_t> buffer_;
  bool failed_ = false;
};

enum class InputKind : std::uint8_t { KeyDown = 0, KeyUp = 1, PointerMove = 2, PointerButton = 3 };

struct InputEvent {
  InputKind kind = InputKind::KeyDown;
  std::uint32_t client_seq = 0;
  std::uint32_t code = 0;
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t button = 0;
  /// Assigned at the merge point; not on the client wire.
  std::uint64_t relay_seq = 0;

  bool operator==(const InputEvent&) const = default;
};

/// [kind:1][client_seq:4 BE] then per kind: key [code], move [x][y],
/// button [button][x][y], each 4 BE.
Bytes encode_input(const InputEvent& event);
InputEvent decode_input(std::span<const std::uint8_t> payload);

enum class FrameEncoding : std::uint8_t { Raw = 0, Rle = 1 };

struct FrameUpdate {
  std::uint64_t frame_id = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  FrameEncoding encoding = FrameEncoding::Raw;
  Bytes data;
};

/// [frame_id:8 BE][width:2 BE][height:2 BE][encoding:1][data]
Bytes encode_frame(const FrameUpdate& frame);
/// Validates that the data decodes to width*height*3 bytes.
FrameUpdate decode_frame(std::span<const std::uint8_t> payload);

/// Runs of [count 1..255][r][g][b].
Bytes rle_encode(std::span<const std::uint8_t> rgb);
Bytes rle_decode(std::span<const std::uint8_t> rle, std::size_t expected_size);
/// RGB pixels of a frame regardless of encoding.
Bytes frame_pixels(const FrameUpdate& frame);

/// Acknowledgement sent back to the submitting client: [relay_seq:8 BE][client_seq:4 BE].
struct Ack {
  std::uint64_t relay_seq = 0;
  std::uint32_t client_seq = 0;
};
Bytes encode_ack(const Ack& ack);
Ack decode_ack(std::span<const std::uint8_t> payload);

inline Message frame_message(const FrameUpdate& frame) { return {Opcode::Frame, encode_frame(frame)}; }
inline Message input_message(const InputEvent& event) { return {Opcode::Input, encode_input(event)}; }

}  // namespace rlab::relay
