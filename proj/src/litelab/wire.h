#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "litelab/vid.h"

namespace litelab {

// Big-endian primitive writer/reader shared by the packet format and the
// control protocol.
class Writer {
 public:
  void u8(uint8_t v) { buf_ += (char)v; }
  void u16(uint16_t v);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void i64(int64_t v) { u64((uint64_t)v); }
  void f64(double v);
  // Length-prefixed byte strings: str8 for <=255 bytes, bytes32 otherwise.
  void str8(std::string_view s);
  void bytes32(std::string_view s);
  void vid(const Vid& v) { str8(v.str()); }
  void raw(std::string_view s) { buf_.append(s); }

  const std::string& data() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : d_(data) {}

  bool u8(uint8_t* v);
  bool u16(uint16_t* v);
  bool u32(uint32_t* v);
  bool u64(uint64_t* v);
  bool i64(int64_t* v);
  bool f64(double* v);
  bool str8(std::string* s);
  bool bytes32(std::string* s);
  bool vid(Vid* v);
  bool done() const { return off_ == d_.size(); }
  size_t remaining() const { return d_.size() - off_; }

 private:
  bool take(size_t n, std::string_view* out);
  std::string_view d_;
  size_t off_ = 0;
};

// ---- Packet wire format ----
//
// magic 0x4C4C (2B) | version 0x01 (1B) | type (1B) | ttl (1B) |
// src len (1B) + bytes | dst len (1B) + bytes | payload len (4B) + bytes
// All multi-byte fields big-endian.

enum class PacketType : uint8_t { kData = 0, kControl = 1 };

// Subtypes carried in the first payload byte of Control packets.
enum class ControlType : uint8_t {
  kPause = 1,
  kPauseAck = 2,
  kResume = 3,
  kVidMapUpdate = 4,
};

struct Packet {
  PacketType type = PacketType::kData;
  uint8_t ttl = 64;
  Vid src;
  Vid dst;
  std::string payload;
  // Runtime-only: the neighbor this packet arrived from; not serialized.
  Vid ingress_link;

  static constexpr uint16_t kMagic = 0x4C4C;
  static constexpr uint8_t kVersion = 0x01;
  static constexpr size_t kMaxPayload = 64 * 1024;

  size_t wire_size() const { return 11 + src.str().size() + dst.str().size() + payload.size(); }
  std::string encode() const;
  // Returns consumed byte count on success, 0 if more bytes are needed,
  // nullopt on a malformed header.
  static std::optional<size_t> decode(std::string_view buf, Packet* out, std::string* err);
};

Packet make_control(const Vid& src, const Vid& dst, ControlType ct, std::string_view body = {});

}  // namespace litelab
