#include "rlab/relay/protocol.hpp"

#include <string>

#include "rlab/common/error.hpp"

namespace rlab::relay {
namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t read(std::size_t width) {
    if (pos_ + width > bytes_.size()) {
      throw Error(Errc::ProtocolError, "payload too short");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(read(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(read(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  std::uint64_t u64() { return read(8); }
  std::span<const std::uint8_t> rest() { return bytes_.subspan(pos_); }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw Error(Errc::ProtocolError, "trailing bytes in payload");
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool known_opcode(std::uint8_t op) { return op >= 0x01 && op <= 0x06; }

}  // namespace

Bytes encode(const Message& message) {
  if (message.payload.size() > kMaxPayload) {
    throw Error(Errc::ProtocolError, "payload exceeds limit");
  }
  Bytes out;
  out.reserve(kHeaderSize + message.payload.size());
  out.push_back(static_cast<std::uint8_t>(message.opcode));
  put_u32(out, static_cast<std::uint32_t>(message.payload.size()));
  out.insert(out.end(), message.payload.begin(), message.payload.end());
  return out;
}

Message decode_one(std::span<const std::uint8_t> wire) {
  StreamDecoder decoder;
  decoder.feed(wire);
  auto message = decoder.next();
  if (!message || decoder.buffered() != 0) {
    throw Error(Errc::ProtocolError, "length does not match message size");
  }
  return *message;
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  if (failed_) throw Error(Errc::ProtocolError, "decoder failed earlier");
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> StreamDecoder::next() {
  if (failed_) throw Error(Errc::ProtocolError, "decoder failed earlier");
  if (buffer_.empty()) return std::nullopt;
  const std::uint8_t op = buffer_[0];
  if (!known_opcode(op)) {
    failed_ = true;
    throw Error(Errc::ProtocolError, "unknown opcode " + std::to_string(op));
  }
  if (buffer_.size() < kHeaderSize) return std::nullopt;
  std::uint32_t length = 0;
  for (std::size_t i = 1; i < kHeaderSize; ++i) length = (length << 8) | buffer_[i];
  if (length > kMaxPayload) {
    failed_ = true;
    throw Error(Errc::ProtocolError, "declared length exceeds limit");
  }
  if (buffer_.size() < kHeaderSize + length) return std::nullopt;
  Message message;
  message.opcode = static_cast<Opcode>(op);
  message.payload.assign(buffer_.begin() + kHeaderSize, buffer_.begin() + kHeaderSize + length);
  buffer_.erase(buffer_.begin(), buffer_.begin() + kHeaderSize + length);
  return message;
}

Bytes encode_input(const InputEvent& event) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(event.kind));
  put_u32(out, event.client_seq);
  switch (event.kind) {
    case InputKind::KeyDown:
    case InputKind::KeyUp:
      put_u32(out, event.code);
      break;
    case InputKind::PointerMove:
      put_u32(out, event.x);
      put_u32(out, event.y);
      break;
    case InputKind::PointerButton:
      put_u32(out, event.button);
      put_u32(out, event.x);
      put_u32(out, event.y);
      break;
  }
  return out;
}

InputEvent decode_input(std::span<const std::uint8_t> payload) {
  Reader r(payload);
  InputEvent event;
  const auto kind = r.u8();
  if (kind > 3) throw Error(Errc::ProtocolError, "unknown input kind");
  event.kind = static_cast<InputKind>(kind);
  event.client_seq = r.u32();
  switch (event.kind) {
    case InputKind::KeyDown:
    case InputKind::KeyUp:
      event.code = r.u32();
      break;
    case InputKind::PointerMove:
      event.x = r.u32();
      event.y = r.u32();
      break;
    case InputKind::PointerButton:
      event.button = r.u32();
      event.x = r.u32();
      event.y = r.u32();
      break;
  }
  r.expect_end();
  return event;
}

Bytes encode_frame(const FrameUpdate& frame) {
  Bytes out;
  out.reserve(13 + frame.data.size());
  put_u64(out, frame.frame_id);
  put_u16(out, frame.width);
  put_u16(out, frame.height);
  out.push_back(static_cast<std::uint8_t>(frame.encoding));
  out.insert(out.end(), frame.data.begin(), frame.data.end());
  return out;
}

FrameUpdate decode_frame(std::span<const std::uint8_t> payload) {
  Reader r(payload);
  FrameUpdate frame;
  frame.frame_id = r.u64();
  frame.width = r.u16();
  frame.height = r.u16();
  const auto enc = r.u8();
  if (enc > 1) throw Error(Errc::ProtocolError, "unknown frame encoding");
  frame.encoding = static_cast<FrameEncoding>(enc);
  const auto data = r.rest();
  frame.data.assign(data.begin(), data.end());
  (void)frame_pixels(frame);
  return frame;
}

Bytes rle_encode(std::span<const std::uint8_t> rgb) {
  if (rgb.size() % 3 != 0) throw Error(Errc::InvalidArgument, "RGB data not a multiple of 3");
  Bytes out;
  std::size_t i = 0;
  while (i < rgb.size()) {
    std::size_t run = 1;
    while (run < 255 && i + run * 3 < rgb.size() && rgb[i + run * 3] == rgb[i] &&
           rgb[i + run * 3 + 1] == rgb[i + 1] && rgb[i + run * 3 + 2] == rgb[i + 2]) {
      ++run;
    }
    out.push_back(static_cast<std::uint8_t>(run));
    out.insert(out.end(), rgb.begin() + i, rgb.begin() + i + 3);
    i += run * 3;
  }
  return out;
}

Bytes rle_decode(std::span<const std::uint8_t> rle, std::size_t expected_size) {
  if (rle.size() % 4 != 0) throw Error(Errc::ProtocolError, "RLE data not a multiple of 4");
  Bytes out;
  out.reserve(expected_size);
  for (std::size_t i = 0; i < rle.size(); i += 4) {
    const std::size_t run = rle[i];
    if (run == 0) throw Error(Errc::ProtocolError, "RLE run of length 0");
    if (out.size() + run * 3 > expected_size) throw Error(Errc::ProtocolError, "RLE data overflows frame");
    for (std::size_t k = 0; k < run; ++k) out.insert(out.end(), rle.begin() + i + 1, rle.begin() + i + 4);
  }
  if (out.size() != expected_size) throw Error(Errc::ProtocolError, "RLE data underfills frame");
  return out;
}

Bytes frame_pixels(const FrameUpdate& frame) {
  const std::size_t expected = std::size_t{frame.width} * frame.height * 3;
  if (frame.encoding == FrameEncoding::Rle) return rle_decode(frame.data, expected);
  if (frame.data.size() != expected) throw Error(Errc::ProtocolError, "raw frame size mismatch");
  return frame.data;
}

Bytes encode_ack(const Ack& ack) {
  Bytes out;
  put_u64(out, ack.relay_seq);
  put_u32(out, ack.client_seq);
  return out;
}

Ack decode_ack(std::span<const std::uint8_t> payload) {
  Reader r(payload);
  Ack ack;
  ack.relay_seq = r.u64();
  ack.client_seq = r.u32();
  r.expect_end();
  return ack;
}

}  // namespace rlab::relay
