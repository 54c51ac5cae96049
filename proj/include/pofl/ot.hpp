#pragma once

// 1-out-of-2 oblivious transfer for 128-bit wire labels.
//
// Two interchangeable backends:
//  - ot_co15: the "simplest OT" Diffie-Hellman construction over the
//    quadratic-residue subgroup of a fixed 768-bit safe prime (the RFC 2409
//    group-1 modulus, g = 4). The receiver's group element is one uniform
//    subgroup element regardless of the choice bit, which is what the
//    obliviousness test below exploits: for any transcript produced with
//    choice 0 and nonce b there is a nonce b' = b - a (mod q) producing the
//    byte-identical transcript with choice 1.
//  - ot_dealer: precomputed (trusted-dealer) OT, the fast path for bulk
//    tests; one pad pair per transfer from a common seed, online phase is
//    one masked bit and two masked labels.
//
// Both log exact wire bytes and a transcript digest.

#include <gmpxx.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "pofl/bytes.hpp"
#include "pofl/errors.hpp"
#include "pofl/gc.hpp"
#include "pofl/hash.hpp"
#include "pofl/paillier.hpp"

namespace pofl {

namespace ot_group {

inline const mpz_class& modulus() {
  static const mpz_class p(
      "0xFFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
      "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
      "4FE1356D6D51C245E485B576625E7EC6F44C42E9A63A3620FFFFFFFFFFFFFFFF");
  return p;
}

inline const mpz_class& subgroup_order() {
  static const mpz_class q((modulus() - 1) / 2);
  return q;
}

inline const mpz_class& generator() {
  static const mpz_class g(4);
  return g;
}

constexpr std::size_t kElementBytes = 96;  // 768-bit elements, fixed width

inline mpz_class pow_mod(const mpz_class& base, const mpz_class& exp) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), modulus().get_mpz_t());
  return out;
}

// Reject anything outside the prime-order subgroup.
inline void check_member(const mpz_class& x) {
  if (x <= 1 || x >= modulus()) throw ProtocolError("ot: element outside group range");
  if (mpz_legendre(x.get_mpz_t(), modulus().get_mpz_t()) != 1)
    throw ProtocolError("ot: element not in the quadratic-residue subgroup");
}

inline mpz_class random_exponent(SplitPrg& prg) {
  for (;;) {
    mpz_class e = random_mpz_below(prg, subgroup_order());
    if (sgn(e) > 0) return e;
  }
}

}  // namespace ot_group

struct OtBatchResult {
  std::vector<Label> received;  // receiver's output, one label per transfer
  std::uint64_t bytes = 0;      // total wire bytes, both directions
  Digest transcript_digest{};
};

// Test hook: sender secret and receiver nonces of a run, enough to replay a
// transcript under swapped choice bits.
struct Co15Debug {
  mpz_class sender_secret;
  std::vector<mpz_class> receiver_nonces;
};

inline Label kdf_label(std::uint64_t index, const mpz_class& point) {
  ByteWriter w;
  w.u64(index);
  w.raw(mpz_to_fixed_bytes(point, ot_group::kElementBytes));
  Digest d = sha256(w.bytes());
  Label l;
  std::copy(d.begin(), d.begin() + l.size(), l.begin());
  return l;
}

inline OtBatchResult ot_co15(const std::vector<std::pair<Label, Label>>& messages,
                             const std::vector<int>& choices, SplitPrg& sender_prg,
                             SplitPrg& receiver_prg, Co15Debug* debug = nullptr,
                             const std::vector<mpz_class>* forced_nonces = nullptr) {
  using namespace ot_group;
  if (messages.size() != choices.size()) throw InvalidArgument("ot: size mismatch");
  if (forced_nonces && forced_nonces->size() != choices.size())
    throw InvalidArgument("ot: forced nonce count mismatch");
  OtBatchResult res;
  ByteWriter wire;

  // Sender round: A = g^a, one secret for the whole batch.
  mpz_class a = random_exponent(sender_prg);
  mpz_class A = pow_mod(generator(), a);
  wire.raw(mpz_to_fixed_bytes(A, kElementBytes));
  res.bytes += kElementBytes;
  if (debug) debug->sender_secret = a;

  // Receiver round: B = g^b (choice 0) or A*g^b (choice 1).
  check_member(A);
  std::vector<mpz_class> bs(choices.size()), points(choices.size());
  for (std::size_t i = 0; i < choices.size(); ++i) {
    bs[i] = forced_nonces ? (*forced_nonces)[i] : random_exponent(receiver_prg);
    points[i] = pow_mod(generator(), bs[i]);
    if (choices[i]) points[i] = (points[i] * A) % modulus();
    wire.raw(mpz_to_fixed_bytes(points[i], kElementBytes));
    res.bytes += kElementBytes;
  }
  if (debug) debug->receiver_nonces = bs;

  // Sender derives both pads and masks both messages.
  mpz_class a_inv_base;
  if (mpz_invert(a_inv_base.get_mpz_t(), A.get_mpz_t(), modulus().get_mpz_t()) == 0)
    throw ProtocolError("ot: sender point not invertible");
  std::vector<std::pair<Label, Label>> masked(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i) {
    check_member(points[i]);
    Label k0 = kdf_label(i, pow_mod(points[i], a));
    Label k1 = kdf_label(i, pow_mod((points[i] * a_inv_base) % modulus(), a));
    masked[i] = {label_xor(messages[i].first, k0), label_xor(messages[i].second, k1)};
    wire.raw(masked[i].first.data(), masked[i].first.size());
    wire.raw(masked[i].second.data(), masked[i].second.size());
    res.bytes += 2 * sizeof(Label);
  }

  // Receiver unmasks its chosen message with k_c = H(A^b).
  for (std::size_t i = 0; i < choices.size(); ++i) {
    Label kc = kdf_label(i, pow_mod(A, bs[i]));
    res.received.push_back(
        label_xor(choices[i] ? masked[i].second : masked[i].first, kc));
  }

  res.transcript_digest = sha256(wire.bytes());
  return res;
}

inline OtBatchResult ot_dealer(const std::vector<std::pair<Label, Label>>& messages,
                               const std::vector<int>& choices, SplitPrg& dealer_prg) {
  if (messages.size() != choices.size()) throw InvalidArgument("ot: size mismatch");
  OtBatchResult res;
  ByteWriter wire;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    // Dealer hands the sender (r0, r1) and the receiver (cp, r_cp).
    Label r0 = random_label(dealer_prg), r1 = random_label(dealer_prg);
    int cp = static_cast<int>(dealer_prg.uniform_u64(2));
    Label w = cp ? r1 : r0;

    int e = choices[i] ^ cp;
    wire.u8(static_cast<std::uint8_t>(e));
    Label f0 = label_xor(messages[i].first, e ? r1 : r0);
    Label f1 = label_xor(messages[i].second, e ? r0 : r1);
    wire.raw(f0.data(), f0.size());
    wire.raw(f1.data(), f1.size());
    res.bytes += 1 + 2 * sizeof(Label);
    res.received.push_back(label_xor(choices[i] ? f1 : f0, w));
  }
  res.transcript_digest = sha256(wire.bytes());
  return res;
}

}  // namespace pofl
