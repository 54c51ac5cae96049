#pragma once

// Block structures for the consensus simulation. A round's winning pool is
// the one whose *verified* model accuracy is highest; claims that the
// verification step did not confirm are disqualified. Blocks carry opaque-ish
// typed transactions (trades, leak penalties, rewards); reputations are pure
// chain state, reconstructible by replay from genesis.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pofl/bytes.hpp"
#include "pofl/errors.hpp"
#include "pofl/hash.hpp"

namespace pofl {

// ---- transactions -----------------------------------------------------------

struct Tx {
  enum class Kind : std::uint8_t { Trade = 1, Leak = 2, Reward = 3 };

  Kind kind = Kind::Trade;
  std::string party_a;  // trade: provider, leak/reward: pool
  std::string party_b;  // trade: pool
  double value = 0;     // trade: price, reward: amount
  double aux = 0;       // trade: draw probability
  std::uint8_t flag = 0;  // trade: accepted

  static Tx trade(std::string provider, std::string pool, double price, double p, bool accepted) {
    Tx t;
    t.kind = Kind::Trade;
    t.party_a = std::move(provider);
    t.party_b = std::move(pool);
    t.value = price;
    t.aux = p;
    t.flag = accepted ? 1 : 0;
    return t;
  }

  static Tx leak(std::string pool) {
    Tx t;
    t.kind = Kind::Leak;
    t.party_a = std::move(pool);
    return t;
  }

  static Tx reward(std::string pool, double amount) {
    Tx t;
    t.kind = Kind::Reward;
    t.party_a = std::move(pool);
    t.value = amount;
    return t;
  }

  Bytes encode() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(kind));
    w.str(party_a);
    w.str(party_b);
    w.f64(value);
    w.f64(aux);
    w.u8(flag);
    return w.take();
  }

  static Tx decode(const Bytes& b) {
    ByteReader r(b);
    Tx t;
    std::uint8_t k = r.u8();
    if (k < 1 || k > 3) throw IntegrityError("tx decode: unknown kind");
    t.kind = static_cast<Kind>(k);
    t.party_a = r.str();
    t.party_b = r.str();
    t.value = r.f64();
    t.aux = r.f64();
    t.flag = r.u8();
    if (!r.done()) throw IntegrityError("tx decode: trailing bytes");
    return t;
  }
};

// ---- merkle -----------------------------------------------------------------

inline Digest merkle_root(const std::vector<Bytes>& leaves) {
  if (leaves.empty()) return sha256(std::string());
  std::vector<Digest> level;
  level.reserve(leaves.size());
  for (const Bytes& l : leaves) level.push_back(sha256(l));
  while (level.size() > 1) {
    std::vector<Digest> next;
    for (std::size_t i = 0; i < level.size(); i += 2) {
      const Digest& a = level[i];
      const Digest& b = (i + 1 < level.size()) ? level[i + 1] : level[i];  // duplicate last
      ByteWriter w;
      w.raw(a.data(), a.size());
      w.raw(b.data(), b.size());
      next.push_back(sha256(w.bytes()));
    }
    level = std::move(next);
  }
  return level[0];
}

// ---- blocks -----------------------------------------------------------------

struct BlockHeader {
  std::uint32_t version = 1;
  std::uint64_t round = 0;
  Digest prev_hash{};
  Digest merkle{};
  std::uint64_t timestamp = 0;
  std::string pool_id;        // winning pool
  std::uint64_t accuracy = 0; // verified match count

  Bytes encode() const {
    ByteWriter w;
    w.u32(version);
    w.u64(round);
    w.raw(prev_hash.data(), prev_hash.size());
    w.raw(merkle.data(), merkle.size());
    w.u64(timestamp);
    w.str(pool_id);
    w.u64(accuracy);
    return w.take();
  }

  static BlockHeader decode(ByteReader& r) {
    BlockHeader h;
    h.version = r.u32();
    h.round = r.u64();
    Bytes ph = r.raw(32), mk = r.raw(32);
    std::copy(ph.begin(), ph.end(), h.prev_hash.begin());
    std::copy(mk.begin(), mk.end(), h.merkle.begin());
    h.timestamp = r.u64();
    h.pool_id = r.str();
    h.accuracy = r.u64();
    return h;
  }
};

inline Digest block_hash(const BlockHeader& h) { return sha256(h.encode()); }

struct Block {
  BlockHeader header;
  std::vector<Bytes> txs;  // encoded Tx records
};

// ---- election ----------------------------------------------------------------

struct Candidate {
  std::string pool_id;
  std::uint64_t claimed_accuracy = 0;
  std::uint64_t verified_accuracy = 0;
  std::uint64_t timestamp = 0;  // submission time
  Digest model_hash{};

  Bytes encode() const {
    ByteWriter w;
    w.str(pool_id);
    w.u64(claimed_accuracy);
    w.u64(verified_accuracy);
    w.u64(timestamp);
    w.raw(model_hash.data(), model_hash.size());
    return w.take();
  }
};

// Highest verified accuracy among truthful claims wins; ties resolved by
// earlier submission, then by candidate hash, so every full node agrees.
inline std::optional<std::size_t> elect_winner(const std::vector<Candidate>& cands) {
  std::optional<std::size_t> best;
  std::string best_hash;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Candidate& c = cands[i];
    if (c.claimed_accuracy != c.verified_accuracy) continue;  // inflated or stale claim
    std::string h = digest_hex(sha256(c.encode()));
    if (!best) {
      best = i;
      best_hash = h;
      continue;
    }
    const Candidate& b = cands[*best];
    bool better = c.verified_accuracy > b.verified_accuracy ||
                  (c.verified_accuracy == b.verified_accuracy &&
                   (c.timestamp < b.timestamp ||
                    (c.timestamp == b.timestamp && h < best_hash)));
    if (better) {
      best = i;
      best_hash = h;
    }
  }
  return best;
}

// ---- reputation ---------------------------------------------------------------

// Pool reputations, derived purely from chain contents. Every proven leak
// costs a fixed 0.1; reputations never go below zero.
class ReputationLedger {
 public:
  explicit ReputationLedger(double initial = 0.5) : initial_(initial) {}

  double get(const std::string& pool) const {
    auto it = rep_.find(pool);
    return it == rep_.end() ? initial_ : it->second;
  }

  void apply(const Tx& tx) {
    if (tx.kind != Tx::Kind::Leak) return;
    double r = get(tx.party_a) - 0.1;
    rep_[tx.party_a] = r < 0 ? 0.0 : r;
  }

  const std::map<std::string, double>& table() const { return rep_; }

 private:
  double initial_;
  std::map<std::string, double> rep_;
};

// ---- the chain -----------------------------------------------------------------

class Chain {
 public:
  static constexpr std::uint32_t kMagic = 0x50464C43;  // "PFLC"
  static constexpr std::uint16_t kVersion = 1;

  const std::vector<Block>& blocks() const { return blocks_; }

  Digest tip_hash() const {
    return blocks_.empty() ? sha256(std::string("genesis")) : block_hash(blocks_.back().header);
  }

  // Builds the header from parts, links and appends.
  const Block& append(std::uint64_t round, std::uint64_t timestamp, const std::string& pool_id,
                      std::uint64_t accuracy, std::vector<Bytes> txs) {
    Block b;
    b.header.round = round;
    b.header.timestamp = timestamp;
    b.header.pool_id = pool_id;
    b.header.accuracy = accuracy;
    b.header.prev_hash = tip_hash();
    b.header.merkle = merkle_root(txs);
    b.txs = std::move(txs);
    blocks_.push_back(std::move(b));
    return blocks_.back();
  }

  // Full structural validation; throws IntegrityError naming the stage.
  void verify() const {
    Digest prev = sha256(std::string("genesis"));
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const Block& b = blocks_[i];
      if (b.header.prev_hash != prev)
        throw IntegrityError("verify[link]: block " + std::to_string(i) + " prev-hash mismatch");
      if (b.header.merkle != merkle_root(b.txs))
        throw IntegrityError("verify[merkle]: block " + std::to_string(i) + " root mismatch");
      for (const Bytes& raw : b.txs) {
        try {
          Tx::decode(raw);
        } catch (const IntegrityError& e) {
          throw IntegrityError("verify[tx]: block " + std::to_string(i) + ": " + e.what());
        }
      }
      prev = block_hash(b.header);
    }
  }

  ReputationLedger replay_reputation(double initial = 0.5) const {
    ReputationLedger led(initial);
    for (const Block& b : blocks_)
      for (const Bytes& raw : b.txs) led.apply(Tx::decode(raw));
    return led;
  }

  Bytes serialize() const {
    ByteWriter w;
    w.u32(kMagic);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(blocks_.size()));
    for (const Block& b : blocks_) {
      w.blob(b.header.encode());
      w.u32(static_cast<std::uint32_t>(b.txs.size()));
      for (const Bytes& t : b.txs) w.blob(t);
    }
    return w.take();
  }

  static Chain deserialize(const Bytes& data) {
    ByteReader r(data);
    if (r.u32() != kMagic) throw IntegrityError("deserialize[magic]: not a chain dump");
    if (r.u16() != kVersion) throw IntegrityError("deserialize[version]: unsupported version");
    Chain c;
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      Bytes hb = r.blob();
      ByteReader hr(hb);
      Block b;
      b.header = BlockHeader::decode(hr);
      std::uint32_t nt = r.u32();
      for (std::uint32_t t = 0; t < nt; ++t) b.txs.push_back(r.blob());
      c.blocks_.push_back(std::move(b));
    }
    if (!r.done()) throw IntegrityError("deserialize[tail]: trailing bytes");
    return c;
  }

 private:
  std::vector<Block> blocks_;
};

}  // namespace pofl
