#include "litelab/wire.h"

#include <cstring>

namespace litelab {

void Writer::u16(uint16_t v) {
  buf_ += (char)(v >> 8);
  buf_ += (char)v;
}

void Writer::u32(uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) buf_ += (char)(v >> s);
}

void Writer::u64(uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) buf_ += (char)(v >> s);
}

void Writer::f64(double v) {
  uint64_t bits;
  memcpy(&bits, &v, 8);
  u64(bits);
}

void Writer::str8(std::string_view s) {
  u8((uint8_t)s.size());
  buf_.append(s);
}

void Writer::bytes32(std::string_view s) {
  u32((uint32_t)s.size());
  buf_.append(s);
}

bool Reader::take(size_t n, std::string_view* out) {
  if (d_.size() - off_ < n) return false;
  *out = d_.substr(off_, n);
  off_ += n;
  return true;
}

bool Reader::u8(uint8_t* v) {
  std::string_view s;
  if (!take(1, &s)) return false;
  *v = (uint8_t)s[0];
  return true;
}

bool Reader::u16(uint16_t* v) {
  std::string_view s;
  if (!take(2, &s)) return false;
  *v = ((uint16_t)(uint8_t)s[0] << 8) | (uint8_t)s[1];
  return true;
}

bool Reader::u32(uint32_t* v) {
  std::string_view s;
  if (!take(4, &s)) return false;
  *v = 0;
  for (int i = 0; i < 4; i++) *v = (*v << 8) | (uint8_t)s[i];
  return true;
}

bool Reader::u64(uint64_t* v) {
  std::string_view s;
  if (!take(8, &s)) return false;
  *v = 0;
  for (int i = 0; i < 8; i++) *v = (*v << 8) | (uint8_t)s[i];
  return true;
}

bool Reader::i64(int64_t* v) {
  uint64_t u;
  if (!u64(&u)) return false;
  *v = (int64_t)u;
  return true;
}

bool Reader::f64(double* v) {
  uint64_t bits;
  if (!u64(&bits)) return false;
  memcpy(v, &bits, 8);
  return true;
}

bool Reader::str8(std::string* s) {
  uint8_t n;
  if (!u8(&n)) return false;
  std::string_view sv;
  if (!take(n, &sv)) return false;
  s->assign(sv);
  return true;
}

bool Reader::bytes32(std::string* s) {
  uint32_t n;
  if (!u32(&n)) return false;
  std::string_view sv;
  if (!take(n, &sv)) return false;
  s->assign(sv);
  return true;
}

bool Reader::vid(Vid* v) {
  std::string s;
  if (!str8(&s)) return false;
  *v = Vid(std::move(s));
  return true;
}

std::string Packet::encode() const {
  Writer w;
  w.u16(kMagic);
  w.u8(kVersion);
  w.u8((uint8_t)type);
  w.u8(ttl);
  w.vid(src);
  w.vid(dst);
  w.bytes32(payload);
  return w.take();
}

std::optional<size_t> Packet::decode(std::string_view buf, Packet* out, std::string* err) {
  if (buf.size() < 7) return 0;
  Reader r(buf);
  uint16_t magic;
  uint8_t ver, type, ttl;
  r.u16(&magic);
  r.u8(&ver);
  r.u8(&type);
  r.u8(&ttl);
  if (magic != kMagic) {
    if (err) *err = "bad magic";
    return std::nullopt;
  }
  if (ver != kVersion) {
    if (err) *err = "unsupported version";
    return std::nullopt;
  }
  if (type > 1) {
    if (err) *err = "unknown packet type";
    return std::nullopt;
  }
  Vid src, dst;
  if (!r.vid(&src) || !r.vid(&dst)) return 0;  // need more bytes
  if (src.empty() || dst.empty()) {
    if (err) *err = "empty vid";
    return std::nullopt;
  }
  // Validate the payload length before waiting for the bytes, so a corrupt
  // length field cannot stall the stream parser.
  uint32_t plen;
  if (!r.u32(&plen)) return 0;
  if (plen > kMaxPayload) {
    if (err) *err = "payload too large";
    return std::nullopt;
  }
  size_t header = buf.size() - r.remaining();
  if (buf.size() - header < plen) return 0;
  std::string payload(buf.substr(header, plen));
  out->type = (PacketType)type;
  out->ttl = ttl;
  out->src = std::move(src);
  out->dst = std::move(dst);
  out->payload = std::move(payload);
  return header + plen;
}

Packet make_control(const Vid& src, const Vid& dst, ControlType ct, std::string_view body) {
  Packet p;
  p.type = PacketType::kControl;
  p.ttl = 1;
  p.src = src;
  p.dst = dst;
  p.payload = std::string(1, (char)ct) + std::string(body);
  return p;
}

}  // namespace litelab
