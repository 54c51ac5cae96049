#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "pofl/chain.hpp"
#include "pofl/hash.hpp"

using namespace pofl;
using Catch::Matchers::ContainsSubstring;

namespace {

std::size_t find_bytes(const Bytes& hay, const Bytes& needle) {
  auto it = std::search(hay.begin(), hay.end(), needle.begin(), needle.end());
  REQUIRE(it != hay.end());
  return static_cast<std::size_t>(it - hay.begin());
}

Chain sample_chain() {
  Chain c;
  std::vector<Bytes> txs0 = {Tx::trade("provider", "pool-0", 7.5, 0.9, true).encode(),
                             Tx::leak("pool-1").encode(),
                             Tx::reward("pool-0", 12.5).encode()};
  c.append(0, 1000, "pool-0", 41, txs0);
  std::vector<Bytes> txs1 = {Tx::trade("provider", "pool-1", 6.25, 0.8, false).encode(),
                             Tx::reward("pool-1", 12.5).encode()};
  c.append(1, 2000, "pool-1", 44, txs1);
  return c;
}

}  // namespace

TEST_CASE("merkle root: empty, single, odd") {
  CHECK(merkle_root({}) == sha256(std::string()));

  Bytes a = str_bytes("a"), b = str_bytes("b"), c = str_bytes("c");
  CHECK(merkle_root({a}) == sha256(a));

  auto pair_hash = [](const Digest& x, const Digest& y) {
    ByteWriter w;
    w.raw(x.data(), x.size());
    w.raw(y.data(), y.size());
    return sha256(w.bytes());
  };
  Digest ha = sha256(a), hb = sha256(b), hc = sha256(c);
  Digest expect = pair_hash(pair_hash(ha, hb), pair_hash(hc, hc));  // odd: duplicate last
  CHECK(merkle_root({a, b, c}) == expect);

  CHECK(merkle_root({a, b}) != merkle_root({b, a}));  // order matters
}

TEST_CASE("transactions roundtrip and reject malformed bytes") {
  for (const Tx& t : {Tx::trade("prov", "pool-3", 9.25, 0.75, true), Tx::leak("pool-7"),
                      Tx::reward("pool-2", 12.5)}) {
    Tx back = Tx::decode(t.encode());
    CHECK(back.kind == t.kind);
    CHECK(back.party_a == t.party_a);
    CHECK(back.party_b == t.party_b);
    CHECK(back.value == t.value);
    CHECK(back.aux == t.aux);
    CHECK(back.flag == t.flag);
  }

  Bytes raw = Tx::leak("pool-1").encode();
  raw.push_back(0);
  CHECK_THROWS_AS(Tx::decode(raw), IntegrityError);

  Bytes bad = Tx::leak("pool-1").encode();
  bad[0] = 9;
  CHECK_THROWS_AS(Tx::decode(bad), IntegrityError);

  CHECK_THROWS_AS(Tx::decode(Bytes{}), IntegrityError);
}

TEST_CASE("election picks the best truthful candidate") {
  auto cand = [](std::string id, std::uint64_t claimed, std::uint64_t verified, std::uint64_t ts) {
    Candidate c;
    c.pool_id = std::move(id);
    c.claimed_accuracy = claimed;
    c.verified_accuracy = verified;
    c.timestamp = ts;
    c.model_hash = sha256(c.pool_id);
    return c;
  };

  SECTION("highest verified accuracy wins") {
    std::vector<Candidate> cs = {cand("a", 5, 5, 10), cand("b", 9, 9, 11), cand("c", 7, 7, 9)};
    auto w = elect_winner(cs);
    REQUIRE(w);
    CHECK(cs[*w].pool_id == "b");
  }
  SECTION("inflated claims are disqualified") {
    std::vector<Candidate> cs = {cand("a", 5, 5, 10), cand("b", 12, 9, 11)};
    auto w = elect_winner(cs);
    REQUIRE(w);
    CHECK(cs[*w].pool_id == "a");
  }
  SECTION("no truthful candidate at all") {
    std::vector<Candidate> cs = {cand("a", 6, 5, 10), cand("b", 12, 9, 11)};
    CHECK(!elect_winner(cs));
    CHECK(!elect_winner({}));
  }
  SECTION("accuracy tie: earlier submission wins") {
    std::vector<Candidate> cs = {cand("late", 7, 7, 20), cand("early", 7, 7, 5)};
    auto w = elect_winner(cs);
    REQUIRE(w);
    CHECK(cs[*w].pool_id == "early");
  }
  SECTION("full tie: candidate hash decides, independent of order") {
    Candidate x = cand("x", 7, 7, 5), y = cand("y", 7, 7, 5);
    auto h = [](const Candidate& c) { return digest_hex(sha256(c.encode())); };
    std::string expect = h(x) < h(y) ? "x" : "y";
    auto w1 = elect_winner({x, y});
    auto w2 = elect_winner({y, x});
    REQUIRE((w1 && w2));
    CHECK(std::vector<Candidate>{x, y}[*w1].pool_id == expect);
    CHECK(std::vector<Candidate>{y, x}[*w2].pool_id == expect);
  }
}

TEST_CASE("reputation ledger applies leaks with a floor at zero") {
  ReputationLedger led(0.5);
  CHECK(led.get("pool-0") == 0.5);
  for (int i = 0; i < 4; ++i) led.apply(Tx::leak("pool-0"));
  CHECK_THAT(led.get("pool-0"), Catch::Matchers::WithinAbs(0.1, 1e-12));
  led.apply(Tx::leak("pool-0"));
  // Five 0.1-steps from 0.5 leave float residue, not an exact zero.
  CHECK_THAT(led.get("pool-0"), Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK(led.get("pool-0") >= 0.0);
  led.apply(Tx::leak("pool-0"));
  CHECK(led.get("pool-0") == 0.0);  // now clamped exactly
  led.apply(Tx::reward("pool-0", 5.0));
  CHECK(led.get("pool-0") == 0.0);  // rewards do not restore reputation
  CHECK(led.get("pool-1") == 0.5);
}

TEST_CASE("chain verifies, replays reputation, and roundtrips") {
  Chain c = sample_chain();
  CHECK(c.blocks().size() == 2);
  CHECK_NOTHROW(c.verify());
  CHECK(c.blocks()[1].header.prev_hash == block_hash(c.blocks()[0].header));

  ReputationLedger replay = c.replay_reputation(0.5);
  CHECK_THAT(replay.get("pool-1"), Catch::Matchers::WithinAbs(0.4, 1e-12));
  CHECK(replay.get("pool-0") == 0.5);

  Bytes dump = c.serialize();
  Chain back = Chain::deserialize(dump);
  CHECK_NOTHROW(back.verify());
  CHECK(back.serialize() == dump);
  CHECK(back.tip_hash() == c.tip_hash());

  Chain again = sample_chain();
  CHECK(again.serialize() == dump);  // construction is deterministic
}

TEST_CASE("genesis tip is fixed and appending moves it") {
  Chain c;
  CHECK(c.tip_hash() == sha256(std::string("genesis")));
  c.append(0, 1, "pool-0", 3, {Tx::reward("pool-0", 1.0).encode()});
  CHECK(c.tip_hash() == block_hash(c.blocks()[0].header));
}

TEST_CASE("structural corruption is detected stage by stage") {
  Chain c = sample_chain();
  Bytes dump = c.serialize();

  SECTION("tx payload flip breaks the merkle stage") {
    Bytes tx = Tx::trade("provider", "pool-0", 7.5, 0.9, true).encode();
    std::size_t at = find_bytes(dump, tx);
    Bytes bad = dump;
    bad[at + tx.size() - 2] ^= 0xff;  // inside the trade payload
    Chain broken = Chain::deserialize(bad);
    CHECK_THROWS_WITH(broken.verify(), ContainsSubstring("verify[merkle]"));
  }
  SECTION("prev-hash flip breaks the link stage") {
    Digest link = block_hash(c.blocks()[0].header);
    Bytes needle(link.begin(), link.end());
    std::size_t at = find_bytes(dump, needle);
    Bytes bad = dump;
    bad[at] ^= 0x01;
    Chain broken = Chain::deserialize(bad);
    CHECK_THROWS_WITH(broken.verify(), ContainsSubstring("verify[link]"));
  }
  SECTION("magic and version are enforced") {
    Bytes bad = dump;
    bad[0] ^= 0xff;
    CHECK_THROWS_WITH(Chain::deserialize(bad), ContainsSubstring("magic"));
    bad = dump;
    bad[4] ^= 0xff;
    CHECK_THROWS_WITH(Chain::deserialize(bad), ContainsSubstring("version"));
  }
  SECTION("truncation and trailing garbage") {
    Bytes bad(dump.begin(), dump.end() - 3);
    CHECK_THROWS_AS(Chain::deserialize(bad), IntegrityError);
    bad = dump;
    bad.push_back(0);
    CHECK_THROWS_WITH(Chain::deserialize(bad), ContainsSubstring("trailing"));
  }
}
