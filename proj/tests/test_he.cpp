#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pofl/hash.hpp"
#include "pofl/he_verify.hpp"
#include "pofl/paillier.hpp"

using namespace pofl;

TEST_CASE("key generation yields a working modulus") {
  SplitPrg prg(100, "he-keys");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  CHECK(kp.pk.bits == 512);
  CHECK(mpz_sizeinbase(kp.pk.n.get_mpz_t(), 2) == 512);
  CHECK(kp.pk.fingerprint != 0);
  CHECK(kp.pk.plaintext_width() == 64);
  CHECK(kp.pk.ciphertext_width() == 128);

  PaillierKeyPair other = paillier_keygen(prg, 512);
  CHECK(kp.pk.n != other.pk.n);
  CHECK(kp.pk.fingerprint != other.pk.fingerprint);
}

TEST_CASE("raw encryption roundtrips and randomizes") {
  SplitPrg prg(101, "he-raw");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  for (long v : {0L, 1L, 7L, 123456789L}) {
    mpz_class m(v);
    mpz_class c1 = paillier_encrypt(kp.pk, m, prg);
    mpz_class c2 = paillier_encrypt(kp.pk, m, prg);
    CHECK(c1 != c2);  // fresh randomness
    CHECK(paillier_decrypt(kp, c1) == m);
    CHECK(paillier_decrypt(kp, c2) == m);
  }
}

TEST_CASE("homomorphic add and plaintext multiply are exact") {
  SplitPrg prg(102, "he-ops");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  for (int i = 0; i < 200; ++i) {
    long long a = static_cast<long long>(prg.uniform_u64(1u << 30)) - (1 << 29);
    long long b = static_cast<long long>(prg.uniform_u64(1u << 30)) - (1 << 29);
    long long k = static_cast<long long>(prg.uniform_u64(1u << 10)) - (1 << 9);
    mpz_class ea = paillier_encrypt(kp.pk, to_signed_residue(kp.pk, mpz_from_ll(a)), prg);
    mpz_class eb = paillier_encrypt(kp.pk, to_signed_residue(kp.pk, mpz_from_ll(b)), prg);
    mpz_class sum = from_signed_residue(kp.pk, paillier_decrypt(kp, paillier_add(kp.pk, ea, eb)));
    REQUIRE(sum == mpz_from_ll(a + b));
    mpz_class prod = from_signed_residue(
        kp.pk, paillier_decrypt(kp, paillier_scalar_mul(kp.pk, ea, mpz_from_ll(k))));
    REQUIRE(prod == mpz_from_ll(a * k));
  }
}

TEST_CASE("fixed-point layer: quantize/decrypt is the identity on the grid") {
  SplitPrg prg(103, "he-fx");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  for (int i = 0; i < 40; ++i) {
    double v = prg.uniform_double(-100.0, 100.0);
    FixedCiphertext ct = he_encrypt(kp.pk, prg, v, FxScale::One);
    CHECK(he_decrypt(kp, ct) == fx_to_double(fx_quantize(v, FxScale::One), FxScale::One));
  }
  for (int i = 0; i < 20; ++i) {
    double v = prg.uniform_double(-20.0, 20.0);
    FixedCiphertext ct = he_encrypt(kp.pk, prg, v, FxScale::Two);
    CHECK(he_decrypt(kp, ct) == fx_to_double(fx_quantize(v, FxScale::Two), FxScale::Two));
  }
}

TEST_CASE("fixed-point add/mul track the integer grid exactly") {
  SplitPrg prg(104, "he-fx-ops");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  for (int i = 0; i < 50; ++i) {
    double a = prg.uniform_double(-40.0, 40.0), b = prg.uniform_double(-40.0, 40.0);
    double k = prg.uniform_double(-4.0, 4.0);
    FixedCiphertext ea = he_encrypt(kp.pk, prg, a, FxScale::One);
    FixedCiphertext eb = he_encrypt(kp.pk, prg, b, FxScale::One);

    long long qsum = fx_quantize(a, FxScale::One) + fx_quantize(b, FxScale::One);
    CHECK(he_decrypt(kp, he_add(kp.pk, ea, eb)) == fx_to_double(qsum, FxScale::One));

    long long qprod = fx_quantize(a, FxScale::One) * fx_quantize(k, FxScale::One);
    CHECK(he_decrypt(kp, he_mul_plain(kp.pk, ea, k)) == fx_to_double(qprod, FxScale::Two));
  }
}

TEST_CASE("key and scale discipline is enforced") {
  SplitPrg prg(105, "he-discipline");
  PaillierKeyPair kp1 = paillier_keygen(prg, 512);
  PaillierKeyPair kp2 = paillier_keygen(prg, 512);
  FixedCiphertext a = he_encrypt(kp1.pk, prg, 1.5, FxScale::One);
  FixedCiphertext b = he_encrypt(kp2.pk, prg, 2.5, FxScale::One);

  CHECK_THROWS_AS(he_decrypt(kp2, a), KeyMismatch);
  CHECK_THROWS_AS(he_add(kp1.pk, a, b), KeyMismatch);

  FixedCiphertext two = he_mul_plain(kp1.pk, a, 3.0);
  CHECK_THROWS_AS(he_add(kp1.pk, a, two), InvalidArgument);   // mixed scales
  CHECK_THROWS_AS(he_mul_plain(kp1.pk, two, 2.0), InvalidArgument);  // scale-2 input
}

TEST_CASE("signed residue embedding covers negatives") {
  SplitPrg prg(106, "he-signed");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  for (long long v : {-1LL, -123456789LL, 1LL, 0LL, -(1LL << 40)}) {
    mpz_class emb = to_signed_residue(kp.pk, mpz_from_ll(v));
    CHECK(emb >= 0);
    CHECK(from_signed_residue(kp.pk, emb) == mpz_from_ll(v));
  }
}

TEST_CASE("masked protocol predicts exactly like local inference") {
  SplitPrg prg(107, "he-protocol");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  for (int trial = 0; trial < 20; ++trial) {
    SplitPrg net_prg = prg.fork("net-" + std::to_string(trial));
    std::size_t attrs = 1 + net_prg.uniform_u64(4), hidden = 1 + net_prg.uniform_u64(3);
    std::size_t labels = 2 + net_prg.uniform_u64(3);
    FeedforwardNet net = FeedforwardNet::random(net_prg, attrs, hidden, labels);
    TestMatrix data = TestMatrix::random(net_prg, 8, attrs, static_cast<std::uint32_t>(labels));

    SplitPrg req = prg.fork("req-" + std::to_string(trial));
    SplitPrg pool = prg.fork("pool-" + std::to_string(trial));
    MaskedInferenceResult res = masked_label_prediction(net, data, kp, req, pool);
    REQUIRE(res.predicted.size() == data.rows.size());
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
      INFO("trial " << trial << " row " << i);
      REQUIRE(res.predicted[i] == plaintext_infer(net, data.rows[i]));
    }
  }
}

TEST_CASE("protocol traffic is exactly linear in the row count") {
  SplitPrg prg(108, "he-linear");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  FeedforwardNet net = FeedforwardNet::random(prg, 3, 2, 3);
  auto run_rows = [&](std::size_t rows, const char* tag) {
    SplitPrg data_prg = prg.fork(std::string("data-") + tag);
    TestMatrix data = TestMatrix::random(data_prg, rows, 3, 3);
    SplitPrg req = prg.fork(std::string("req-") + tag);
    SplitPrg pool = prg.fork(std::string("pool-") + tag);
    return masked_label_prediction(net, data, kp, req, pool).total_bytes();
  };
  std::uint64_t five = run_rows(5, "a"), ten = run_rows(10, "b");
  CHECK(ten == 2 * five);
  // Per-row cost: attrs + hidden ciphertexts across, hidden plaintexts back.
  std::uint64_t ctw = kp.pk.ciphertext_width(), ptw = kp.pk.plaintext_width();
  CHECK(five == 5 * (3 * ctw + 2 * ctw + 2 * ptw));
}

TEST_CASE("transcripts are reproducible and seed-sensitive") {
  SplitPrg prg(109, "he-digest");
  PaillierKeyPair kp = paillier_keygen(prg, 512);
  FeedforwardNet net = FeedforwardNet::random(prg, 2, 2, 2);
  TestMatrix data = TestMatrix::random(prg, 6, 2, 2);
  auto run = [&](std::uint64_t seed) {
    SplitPrg req(seed, "req");
    SplitPrg pool(seed, "pool");
    return masked_label_prediction(net, data, kp, req, pool);
  };
  MaskedInferenceResult a = run(1), b = run(1), c = run(2);
  CHECK(a.transcript_digest == b.transcript_digest);
  CHECK(a.transcript_digest != c.transcript_digest);
  CHECK(a.predicted == c.predicted);  // masking never changes the answer
}
