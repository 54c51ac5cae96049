#pragma once

// Additively homomorphic encryption (Paillier, g = n+1). Supports ciphertext
// addition and multiplication by a plaintext scalar, which is all the masked
// inference protocol needs. Plaintext space Z_n; signed values are embedded
// by wrapping negatives to n - |v|.

#include <gmpxx.h>

#include <cstdint>
#include <string>

#include "pofl/bytes.hpp"
#include "pofl/errors.hpp"
#include "pofl/hash.hpp"

namespace pofl {

// gmpxx has no long long overloads; on this LP64 target long carries 64 bits.
inline mpz_class mpz_from_ll(long long v) { return mpz_class(static_cast<long>(v)); }

inline mpz_class mpz_from_bytes(const Bytes& b) {
  mpz_class x;
  mpz_import(x.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
  return x;
}

// Big-endian, left-padded with zeros to exactly `width` bytes.
inline Bytes mpz_to_fixed_bytes(const mpz_class& x, std::size_t width) {
  if (sgn(x) < 0) throw InvalidArgument("mpz_to_fixed_bytes: negative value");
  std::size_t count = 0;
  Bytes raw((mpz_sizeinbase(x.get_mpz_t(), 2) + 7) / 8);
  if (!raw.empty()) mpz_export(raw.data(), &count, 1, 1, 1, 0, x.get_mpz_t());
  raw.resize(count);
  if (count > width) throw InvalidArgument("mpz_to_fixed_bytes: value too wide");
  Bytes out(width, 0);
  std::copy(raw.begin(), raw.end(), out.begin() + (width - count));
  return out;
}

inline mpz_class random_mpz_bits(SplitPrg& prg, unsigned bits) {
  Bytes b = prg.bytes((bits + 7) / 8);
  mpz_class x = mpz_from_bytes(b);
  // Trim to exactly `bits` and force the top bit so the width is stable.
  mpz_class mask = (mpz_class(1) << bits) - 1;
  x &= mask;
  mpz_setbit(x.get_mpz_t(), bits - 1);
  return x;
}

inline mpz_class random_mpz_below(SplitPrg& prg, const mpz_class& bound) {
  unsigned bits = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  for (;;) {
    Bytes b = prg.bytes((bits + 7) / 8);
    mpz_class x = mpz_from_bytes(b);
    x &= (mpz_class(1) << bits) - 1;
    if (x < bound) return x;
  }
}

struct PaillierPublicKey {
  mpz_class n, n2;
  unsigned bits = 0;              // modulus size in bits
  std::uint64_t fingerprint = 0;  // truncated hash of n, detects key mixups

  std::size_t plaintext_width() const { return (bits + 7) / 8; }
  std::size_t ciphertext_width() const { return 2 * ((bits + 7) / 8); }
};

struct PaillierKeyPair {
  PaillierPublicKey pk;
  mpz_class lambda, mu;
};

inline std::uint64_t key_fingerprint(const mpz_class& n) {
  Bytes raw = mpz_to_fixed_bytes(n, (mpz_sizeinbase(n.get_mpz_t(), 2) + 7) / 8);
  Digest d = sha256(raw);
  std::uint64_t fp = 0;
  for (int i = 0; i < 8; ++i) fp = (fp << 8) | d[i];
  return fp;
}

inline mpz_class random_prime(SplitPrg& prg, unsigned bits) {
  mpz_class p = random_mpz_bits(prg, bits);
  mpz_nextprime(p.get_mpz_t(), p.get_mpz_t());
  return p;
}

inline PaillierKeyPair paillier_keygen(SplitPrg& prg, unsigned bits = 2048) {
  if (bits < 256 || bits % 2 != 0) throw InvalidArgument("paillier_keygen: bad key size");
  for (;;) {
    mpz_class p = random_prime(prg, bits / 2);
    mpz_class q = random_prime(prg, bits / 2);
    if (p == q) continue;
    mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) < bits) continue;
    PaillierKeyPair kp;
    kp.pk.n = n;
    kp.pk.n2 = n * n;
    kp.pk.bits = bits;
    kp.pk.fingerprint = key_fingerprint(n);
    mpz_class pm1 = p - 1, qm1 = q - 1;
    mpz_lcm(kp.lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
    // mu = lambda^-1 mod n; exists because gcd(lambda, n) = 1 for distinct
    // primes of this size.
    if (mpz_invert(kp.mu.get_mpz_t(), kp.lambda.get_mpz_t(), n.get_mpz_t()) == 0) continue;
    return kp;
  }
}

inline mpz_class paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m,
                                  SplitPrg& prg) {
  if (sgn(m) < 0 || m >= pk.n) throw InvalidArgument("paillier_encrypt: plaintext out of range");
  mpz_class r;
  do {
    r = random_mpz_below(prg, pk.n);
  } while (sgn(r) == 0 || gcd(r, pk.n) != 1);
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t(), pk.n2.get_mpz_t());
  // g^m = (1+n)^m = 1 + m*n (mod n^2)
  mpz_class gm = (1 + m * pk.n) % pk.n2;
  return (gm * rn) % pk.n2;
}

inline mpz_class paillier_decrypt(const PaillierKeyPair& kp, const mpz_class& c) {
  if (sgn(c) <= 0 || c >= kp.pk.n2) throw InvalidArgument("paillier_decrypt: bad ciphertext");
  mpz_class x;
  mpz_powm(x.get_mpz_t(), c.get_mpz_t(), kp.lambda.get_mpz_t(), kp.pk.n2.get_mpz_t());
  mpz_class l = (x - 1) / kp.pk.n;
  return (l * kp.mu) % kp.pk.n;
}

inline mpz_class paillier_add(const PaillierPublicKey& pk, const mpz_class& c1,
                              const mpz_class& c2) {
  return (c1 * c2) % pk.n2;
}

// c^k for signed k: negative scalars go through the ciphertext inverse.
inline mpz_class paillier_scalar_mul(const PaillierPublicKey& pk, const mpz_class& c,
                                     const mpz_class& k) {
  mpz_class e = k, base = c;
  if (sgn(e) < 0) {
    e = -e;
    if (mpz_invert(base.get_mpz_t(), base.get_mpz_t(), pk.n2.get_mpz_t()) == 0)
      throw IntegrityError("paillier_scalar_mul: ciphertext not invertible");
  }
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), pk.n2.get_mpz_t());
  return out;
}

// Signed embedding helpers: values in (-n/2, n/2) round-trip exactly.
inline mpz_class to_signed_residue(const PaillierPublicKey& pk, const mpz_class& v) {
  mpz_class half = pk.n / 2;
  if (v > half || v < -half) throw InvalidArgument("to_signed_residue: out of range");
  return sgn(v) < 0 ? mpz_class(pk.n + v) : v;
}

inline mpz_class from_signed_residue(const PaillierPublicKey& pk, const mpz_class& x) {
  return x > pk.n / 2 ? mpz_class(x - pk.n) : x;
}

}  // namespace pofl
