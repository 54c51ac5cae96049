#pragma once

// Canonical byte-order helpers. Everything that ends up hashed or written to
// disk goes through these so the encoding is identical on every platform:
// unsigned integers big-endian, doubles as the big-endian IEEE-754 bit
// pattern, byte strings length-prefixed with u32.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "pofl/errors.hpp"

namespace pofl {

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
    buf_.push_back(static_cast<std::uint8_t>(v));
  }

  void u32(std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }

  void u64(std::uint64_t v) {
    for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> s));
  }

  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }

  void raw(const Bytes& b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void raw(const std::uint8_t* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }

  void blob(const Bytes& b) {
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
  }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  const Bytes& bytes() const { return buf_; }
  Bytes take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  Bytes buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const Bytes& b) : p_(b.data()), end_(b.data() + b.size()) {}
  ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), end_(p + n) {}

  std::uint8_t u8() { return *need(1); }

  std::uint16_t u16() {
    const std::uint8_t* p = need(2);
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
  }

  std::uint32_t u32() {
    const std::uint8_t* p = need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | p[i];
    return v;
  }

  std::uint64_t u64() {
    const std::uint8_t* p = need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
  }

  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  Bytes raw(std::size_t n) {
    const std::uint8_t* p = need(n);
    return Bytes(p, p + n);
  }

  Bytes blob() { return raw(u32()); }

  std::string str() {
    std::uint32_t n = u32();
    const std::uint8_t* p = need(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  bool done() const { return p_ == end_; }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

 private:
  const std::uint8_t* need(std::size_t n) {
    if (remaining() < n) throw IntegrityError("byte stream truncated");
    const std::uint8_t* p = p_;
    p_ += n;
    return p;
  }

  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

inline std::string to_hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (std::uint8_t c : b) {
    s.push_back(digits[c >> 4]);
    s.push_back(digits[c & 0xf]);
  }
  return s;
}

inline Bytes from_hex(const std::string& s) {
  if (s.size() % 2 != 0) throw InvalidArgument("odd-length hex string");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw InvalidArgument("bad hex digit");
  };
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>((nib(s[2 * i]) << 4) | nib(s[2 * i + 1]));
  return out;
}

inline Bytes str_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace pofl
