#pragma once

// Masked label prediction. The requester owns sensitive test rows, the pool
// owns a small feedforward model it is not willing to reveal. The requester
// sends encrypted attributes; the pool evaluates the first dense layer under
// the encryption, adds a fresh additive mask per (row, node), and returns the
// masked ciphertexts. The requester decrypts and returns the masked values in
// plaintext; only the pool can strip the masks, apply the activation and run
// the remaining layers locally. Neither side sees the other's secret.
//
// First-layer arithmetic is fixed point (24 fractional bits): attributes and
// weights carry scale 2^f, products and biases 2^2f. The reference
// (plaintext) inference quantizes the first layer on exactly the same grid,
// so encrypted and plaintext predictions agree bit for bit.

#include <cmath>
#include <cstdint>
#include <vector>

#include "pofl/bytes.hpp"
#include "pofl/errors.hpp"
#include "pofl/hash.hpp"
#include "pofl/paillier.hpp"

namespace pofl {

constexpr int kFracBits = 24;

enum class FxScale : std::uint8_t { One = 1, Two = 2 };  // 2^f vs 2^(2f)

inline long long fx_quantize(double v, FxScale s) {
  double scale = std::ldexp(1.0, s == FxScale::One ? kFracBits : 2 * kFracBits);
  double scaled = v * scale;
  if (!(std::fabs(scaled) < 9.0e18)) throw InvalidArgument("fx_quantize: value out of range");
  return std::llround(scaled);
}

inline double fx_to_double(long long raw, FxScale s) {
  return std::ldexp(static_cast<double>(raw), -(s == FxScale::One ? kFracBits : 2 * kFracBits));
}

struct FixedCiphertext {
  mpz_class c;
  FxScale scale = FxScale::One;
  std::uint64_t key_fp = 0;
};

inline FixedCiphertext he_encrypt(const PaillierPublicKey& pk, SplitPrg& prg, double v,
                                  FxScale scale) {
  mpz_class m = to_signed_residue(pk, mpz_from_ll(fx_quantize(v, scale)));
  return FixedCiphertext{paillier_encrypt(pk, m, prg), scale, pk.fingerprint};
}

inline void require_same_key(std::uint64_t a, std::uint64_t b) {
  if (a != b) throw KeyMismatch("ciphertext bound to a different key");
}

inline double he_decrypt(const PaillierKeyPair& kp, const FixedCiphertext& ct) {
  require_same_key(kp.pk.fingerprint, ct.key_fp);
  mpz_class v = from_signed_residue(kp.pk, paillier_decrypt(kp, ct.c));
  if (!v.fits_slong_p()) throw IntegrityError("he_decrypt: decoded value too large");
  return fx_to_double(v.get_si(), ct.scale);
}

inline FixedCiphertext he_add(const PaillierPublicKey& pk, const FixedCiphertext& a,
                              const FixedCiphertext& b) {
  require_same_key(pk.fingerprint, a.key_fp);
  require_same_key(a.key_fp, b.key_fp);
  if (a.scale != b.scale) throw InvalidArgument("he_add: mixed fixed-point scales");
  return FixedCiphertext{paillier_add(pk, a.c, b.c), a.scale, a.key_fp};
}

// Multiply an encrypted scale-1 value by a plaintext scale-1 factor; the
// result carries scale 2.
inline FixedCiphertext he_mul_plain(const PaillierPublicKey& pk, const FixedCiphertext& ct,
                                    double factor) {
  require_same_key(pk.fingerprint, ct.key_fp);
  if (ct.scale != FxScale::One) throw InvalidArgument("he_mul_plain: expects scale-1 input");
  mpz_class k = mpz_from_ll(fx_quantize(factor, FxScale::One));
  return FixedCiphertext{paillier_scalar_mul(pk, ct.c, k), FxScale::Two, ct.key_fp};
}

// ---- model and reference inference ----------------------------------------

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct FeedforwardNet {
  std::size_t n_attrs = 0;   // input width
  std::size_t n_hidden = 0;  // first dense layer
  std::size_t n_labels = 0;  // output classes
  std::vector<double> w1;    // [hidden][attrs]
  std::vector<double> b1;    // [hidden]
  std::vector<double> w2;    // [labels][hidden]
  std::vector<double> b2;    // [labels]

  static FeedforwardNet random(SplitPrg& prg, std::size_t attrs, std::size_t hidden,
                               std::size_t labels) {
    FeedforwardNet net;
    net.n_attrs = attrs;
    net.n_hidden = hidden;
    net.n_labels = labels;
    auto fill = [&](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (double& x : v) x = prg.uniform_double(-2.0, 2.0);
    };
    fill(net.w1, hidden * attrs);
    fill(net.b1, hidden);
    fill(net.w2, labels * hidden);
    fill(net.b2, labels);
    return net;
  }
};

// First-layer pre-activation on the fixed-point grid, as an exact integer at
// scale 2^(2f). This is the value the encrypted path reconstructs.
inline long long first_layer_fx(const FeedforwardNet& net, const std::vector<double>& attrs,
                                std::size_t k) {
  long long acc = fx_quantize(net.b1[k], FxScale::Two);
  for (std::size_t j = 0; j < net.n_attrs; ++j)
    acc += fx_quantize(attrs[j], FxScale::One) * fx_quantize(net.w1[k * net.n_attrs + j],
                                                             FxScale::One);
  return acc;
}

inline std::uint32_t infer_from_hidden(const FeedforwardNet& net,
                                       const std::vector<double>& hidden) {
  std::uint32_t best = 0;
  double best_v = -HUGE_VAL;
  for (std::size_t c = 0; c < net.n_labels; ++c) {
    double z = net.b2[c];
    for (std::size_t k = 0; k < net.n_hidden; ++k) z += net.w2[c * net.n_hidden + k] * hidden[k];
    if (z > best_v) {
      best_v = z;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

inline std::uint32_t plaintext_infer(const FeedforwardNet& net, const std::vector<double>& attrs) {
  if (attrs.size() != net.n_attrs) throw InvalidArgument("plaintext_infer: bad attribute count");
  std::vector<double> hidden(net.n_hidden);
  for (std::size_t k = 0; k < net.n_hidden; ++k)
    hidden[k] = sigmoid(fx_to_double(first_layer_fx(net, attrs, k), FxScale::Two));
  return infer_from_hidden(net, hidden);
}

// ---- the interactive protocol ----------------------------------------------

struct TestMatrix {
  std::size_t n_attrs = 0;
  std::vector<std::vector<double>> rows;
  std::vector<std::uint32_t> labels;  // actual labels, kept by the requester

  static TestMatrix random(SplitPrg& prg, std::size_t pieces, std::size_t attrs,
                           std::uint32_t label_space) {
    TestMatrix t;
    t.n_attrs = attrs;
    for (std::size_t i = 0; i < pieces; ++i) {
      std::vector<double> row(attrs);
      for (double& v : row) v = prg.uniform_double(-1.0, 1.0);
      t.rows.push_back(std::move(row));
      t.labels.push_back(static_cast<std::uint32_t>(prg.uniform_u64(label_space)));
    }
    return t;
  }
};

struct MaskedInferenceResult {
  std::vector<std::uint32_t> predicted;  // pool side, one per row
  std::uint64_t bytes_attr_upload = 0;   // requester -> pool ciphertexts
  std::uint64_t bytes_masked_nodes = 0;  // pool -> requester ciphertexts
  std::uint64_t bytes_mask_return = 0;   // requester -> pool plaintext values
  Digest transcript_digest{};

  std::uint64_t total_bytes() const {
    return bytes_attr_upload + bytes_masked_nodes + bytes_mask_return;
  }
};

// Runs both roles of the masked first-layer protocol and returns the pool's
// predictions plus exact wire-format byte counts. All ciphertexts are
// serialized at fixed width (2 * modulus bytes), so traffic is linear in the
// number of rows by construction, and the transcript digest is reproducible
// from the seeds.
inline MaskedInferenceResult masked_label_prediction(const FeedforwardNet& net,
                                                     const TestMatrix& data,
                                                     const PaillierKeyPair& requester_kp,
                                                     SplitPrg& requester_prg, SplitPrg& pool_prg) {
  if (data.n_attrs != net.n_attrs) throw InvalidArgument("protocol: attribute width mismatch");
  const PaillierPublicKey& pk = requester_kp.pk;
  const std::size_t ctw = pk.ciphertext_width(), ptw = pk.plaintext_width();
  MaskedInferenceResult res;
  ByteWriter log;

  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    // Phase 1: requester uploads encrypted attributes for this row.
    std::vector<FixedCiphertext> enc_attrs;
    enc_attrs.reserve(net.n_attrs);
    for (std::size_t j = 0; j < net.n_attrs; ++j) {
      enc_attrs.push_back(he_encrypt(pk, requester_prg, data.rows[i][j], FxScale::One));
      log.raw(mpz_to_fixed_bytes(enc_attrs.back().c, ctw));
      res.bytes_attr_upload += ctw;
    }

    // Phase 2: pool evaluates masked first-layer nodes under encryption.
    std::vector<mpz_class> masks(net.n_hidden);
    std::vector<FixedCiphertext> masked(net.n_hidden);
    for (std::size_t k = 0; k < net.n_hidden; ++k) {
      FixedCiphertext acc = he_mul_plain(pk, enc_attrs[0], net.w1[k * net.n_attrs]);
      for (std::size_t j = 1; j < net.n_attrs; ++j)
        acc = he_add(pk, acc,
                     he_mul_plain(pk, enc_attrs[j], net.w1[k * net.n_attrs + j]));
      masks[k] = mpz_from_bytes(pool_prg.bytes(16));  // 128-bit additive mask
      mpz_class bias_plus_mask =
          (to_signed_residue(pk, mpz_from_ll(fx_quantize(net.b1[k], FxScale::Two))) + masks[k]) %
          pk.n;
      FixedCiphertext blind{paillier_encrypt(pk, bias_plus_mask, pool_prg), FxScale::Two,
                            pk.fingerprint};
      masked[k] = he_add(pk, acc, blind);
      log.raw(mpz_to_fixed_bytes(masked[k].c, ctw));
      res.bytes_masked_nodes += ctw;
    }

    // Phase 3: requester decrypts the masked values and returns them.
    std::vector<mpz_class> returned(net.n_hidden);
    for (std::size_t k = 0; k < net.n_hidden; ++k) {
      require_same_key(pk.fingerprint, masked[k].key_fp);
      returned[k] = paillier_decrypt(requester_kp, masked[k].c);
      log.raw(mpz_to_fixed_bytes(returned[k], ptw));
      res.bytes_mask_return += ptw;
    }

    // Phase 4: pool strips masks and finishes the forward pass locally.
    std::vector<double> hidden(net.n_hidden);
    for (std::size_t k = 0; k < net.n_hidden; ++k) {
      mpz_class z_fx = ((returned[k] - masks[k]) % pk.n + pk.n) % pk.n;
      z_fx = from_signed_residue(pk, z_fx);
      if (!z_fx.fits_slong_p()) throw IntegrityError("protocol: unmasked value out of range");
      hidden[k] = sigmoid(fx_to_double(z_fx.get_si(), FxScale::Two));
    }
    res.predicted.push_back(infer_from_hidden(net, hidden));
  }

  res.transcript_digest = sha256(log.bytes());
  return res;
}

}  // namespace pofl
