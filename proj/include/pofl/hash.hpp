#pragma once

// SHA-256 (OpenSSL EVP) plus a counter-mode PRG derived from it. Every
// source of randomness in the library is seeded through SplitPrg so a run
// is reproducible from a single u64 seed; domain-separation labels keep
// independent consumers independent.

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <string>

#include "pofl/bytes.hpp"
#include "pofl/errors.hpp"

namespace pofl {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(const std::uint8_t* data, std::size_t n) {
  Digest out{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, n) != 1 || EVP_DigestFinal_ex(ctx, out.data(), &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IntegrityError("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

inline Digest sha256(const Bytes& b) { return sha256(b.data(), b.size()); }
inline Digest sha256(const std::string& s) {
  return sha256(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
}

inline Bytes digest_bytes(const Digest& d) { return Bytes(d.begin(), d.end()); }
inline std::string digest_hex(const Digest& d) { return to_hex(digest_bytes(d)); }

// Deterministic byte stream: block i = SHA-256(seed || label || i). fork()
// derives an independent stream, so subsystems can be reordered or skipped
// without disturbing each other's randomness.
class SplitPrg {
 public:
  SplitPrg(std::uint64_t seed, const std::string& label) {
    ByteWriter w;
    w.u64(seed);
    w.str(label);
    state_ = sha256(w.bytes());
  }

  explicit SplitPrg(const Digest& state) : state_(state) {}

  SplitPrg fork(const std::string& label) {
    ByteWriter w;
    w.raw(state_.data(), state_.size());
    w.str(label);
    return SplitPrg(sha256(w.bytes()));
  }

  void fill(std::uint8_t* out, std::size_t n) {
    while (n > 0) {
      if (avail_ == 0) refill();
      std::size_t take = n < avail_ ? n : avail_;
      std::memcpy(out, block_.data() + (block_.size() - avail_), take);
      out += take;
      n -= take;
      avail_ -= take;
    }
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out.data(), n);
    return out;
  }

  std::uint64_t next_u64() {
    std::uint8_t b[8];
    fill(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | b[i];
    return v;
  }

  // Unbiased by rejection; bound must be nonzero.
  std::uint64_t uniform_u64(std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("uniform_u64: zero bound");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    for (;;) {
      std::uint64_t v = next_u64();
      if (v <= limit) return v % bound;
    }
  }

  // 53-bit mantissa mapping: identical on every platform, unlike
  // std::uniform_real_distribution.
  double uniform_double() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform_double(double lo, double hi) { return lo + (hi - lo) * uniform_double(); }

 private:
  void refill() {
    ByteWriter w;
    w.raw(state_.data(), state_.size());
    w.u64(counter_++);
    block_ = sha256(w.bytes());
    avail_ = block_.size();
  }

  Digest state_{};
  Digest block_{};
  std::size_t avail_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace pofl
