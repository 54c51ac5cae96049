#pragma once

// Boolean circuits and a free-XOR garbling scheme for the label-comparison
// step: the pool (garbler) holds predicted labels, the requester (evaluator)
// holds actual labels, and the circuit outputs how many pieces match without
// revealing either side's labels.
//
// Scheme notes: 128-bit wire labels, global offset R with lsb forced to 1 so
// the label's low bit doubles as the permute bit. XOR gates are free (label
// XOR), NOT is XOR with a constant-true wire, OR is built from AND by
// de Morgan. Each AND gate costs one 4-row table; rows are keyed by the
// permute bits and carry an all-zero tag that authenticates the decrypt.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "pofl/bytes.hpp"
#include "pofl/errors.hpp"
#include "pofl/hash.hpp"

namespace pofl {

using Label = std::array<std::uint8_t, 16>;

inline Label label_xor(const Label& a, const Label& b) {
  Label out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] ^ b[i];
  return out;
}

inline int label_lsb(const Label& l) { return l[15] & 1; }

inline Label random_label(SplitPrg& prg) {
  Label l;
  prg.fill(l.data(), l.size());
  return l;
}

// ---- circuit ---------------------------------------------------------------

enum class GateOp : std::uint8_t { Xor, And };

struct Gate {
  GateOp op;
  std::uint32_t a = 0, b = 0, out = 0;
};

struct Circuit {
  std::uint32_t n_wires = 0;
  std::uint32_t const_one = 0;                  // garbler-held constant true
  std::vector<std::uint32_t> garbler_inputs;    // excludes const_one
  std::vector<std::uint32_t> evaluator_inputs;
  std::vector<Gate> gates;                      // topological order
  std::vector<std::uint32_t> outputs;

  std::uint64_t and_count() const {
    std::uint64_t n = 0;
    for (const Gate& g : gates) n += g.op == GateOp::And;
    return n;
  }
  std::uint64_t xor_count() const { return gates.size() - and_count(); }
};

class CircuitBuilder {
 public:
  CircuitBuilder() {
    c_.const_one = new_wire();
  }

  std::uint32_t garbler_input() {
    std::uint32_t w = new_wire();
    c_.garbler_inputs.push_back(w);
    return w;
  }

  std::uint32_t evaluator_input() {
    std::uint32_t w = new_wire();
    c_.evaluator_inputs.push_back(w);
    return w;
  }

  std::uint32_t one() const { return c_.const_one; }

  std::uint32_t zero() {
    if (!zero_set_) {
      zero_ = gate(GateOp::Xor, one(), one());
      zero_set_ = true;
    }
    return zero_;
  }

  std::uint32_t gxor(std::uint32_t a, std::uint32_t b) { return gate(GateOp::Xor, a, b); }
  std::uint32_t gand(std::uint32_t a, std::uint32_t b) { return gate(GateOp::And, a, b); }
  std::uint32_t gnot(std::uint32_t a) { return gxor(a, one()); }
  std::uint32_t gor(std::uint32_t a, std::uint32_t b) {
    return gnot(gand(gnot(a), gnot(b)));
  }

  // sum = a^b^cin; cout = ((a^cin)&(b^cin))^cin -- one AND per full adder.
  std::pair<std::uint32_t, std::uint32_t> full_adder(std::uint32_t a, std::uint32_t b,
                                                     std::uint32_t cin) {
    std::uint32_t t1 = gxor(a, cin);
    std::uint32_t t2 = gxor(b, cin);
    std::uint32_t sum = gxor(t1, b);
    std::uint32_t cout = gxor(gand(t1, t2), cin);
    return {sum, cout};
  }

  // Ripple add of little-endian numbers; result width max(|a|,|b|)+1.
  std::vector<std::uint32_t> add_numbers(const std::vector<std::uint32_t>& a,
                                         const std::vector<std::uint32_t>& b) {
    std::size_t w = std::max(a.size(), b.size());
    std::vector<std::uint32_t> sum;
    std::uint32_t carry = zero();
    for (std::size_t i = 0; i < w; ++i) {
      std::uint32_t ai = i < a.size() ? a[i] : zero();
      std::uint32_t bi = i < b.size() ? b[i] : zero();
      auto [s, cout] = full_adder(ai, bi, carry);
      sum.push_back(s);
      carry = cout;
    }
    sum.push_back(carry);
    return sum;
  }

  void mark_output(std::uint32_t w) { c_.outputs.push_back(w); }

  Circuit take() { return std::move(c_); }

 private:
  std::uint32_t new_wire() { return c_.n_wires++; }

  std::uint32_t gate(GateOp op, std::uint32_t a, std::uint32_t b) {
    std::uint32_t out = new_wire();
    c_.gates.push_back(Gate{op, a, b, out});
    return out;
  }

  Circuit c_;
  std::uint32_t zero_ = 0;
  bool zero_set_ = false;
};

// The comparison circuit: per piece, XOR/NOT turn bitwise equality into a
// single match bit (an OR over the difference bits, inverted); a balanced
// tree of adders counts the match bits.
inline Circuit build_label_compare(std::uint32_t pieces, std::uint32_t label_bits) {
  if (pieces == 0 || label_bits == 0 || label_bits > 32)
    throw InvalidArgument("build_label_compare: bad dimensions");
  CircuitBuilder b;
  std::vector<std::vector<std::uint32_t>> pred(pieces), act(pieces);
  for (std::uint32_t i = 0; i < pieces; ++i)
    for (std::uint32_t j = 0; j < label_bits; ++j) pred[i].push_back(b.garbler_input());
  for (std::uint32_t i = 0; i < pieces; ++i)
    for (std::uint32_t j = 0; j < label_bits; ++j) act[i].push_back(b.evaluator_input());

  std::vector<std::vector<std::uint32_t>> numbers;
  for (std::uint32_t i = 0; i < pieces; ++i) {
    std::vector<std::uint32_t> diff(label_bits);
    for (std::uint32_t j = 0; j < label_bits; ++j) diff[j] = b.gxor(pred[i][j], act[i][j]);
    // Balanced OR tree over the difference bits.
    while (diff.size() > 1) {
      std::vector<std::uint32_t> next;
      for (std::size_t k = 0; k + 1 < diff.size(); k += 2) next.push_back(b.gor(diff[k], diff[k + 1]));
      if (diff.size() % 2 == 1) next.push_back(diff.back());
      diff = std::move(next);
    }
    numbers.push_back({b.gnot(diff[0])});
  }

  // Balanced adder tree over the single-bit match numbers.
  while (numbers.size() > 1) {
    std::vector<std::vector<std::uint32_t>> next;
    for (std::size_t k = 0; k + 1 < numbers.size(); k += 2)
      next.push_back(b.add_numbers(numbers[k], numbers[k + 1]));
    if (numbers.size() % 2 == 1) next.push_back(numbers.back());
    numbers = std::move(next);
  }
  for (std::uint32_t w : numbers[0]) b.mark_output(w);
  return b.take();
}

// ---- cost model -------------------------------------------------------------
// Closed-form non-free gate counts used for capacity planning: each piece's
// comparator counts as one OR, and the counting tree as n-bit adders of total
// size pieces*ceil(log2 pieces)/2.

inline std::uint32_t ceil_log2(std::uint64_t v) {
  if (v == 0) throw InvalidArgument("ceil_log2: zero");
  std::uint32_t l = 0;
  while ((std::uint64_t{1} << l) < v) ++l;
  return l;
}

struct CostModelCounts {
  std::uint64_t or_gates = 0;
  std::uint64_t adder_gates = 0;
  std::uint64_t total = 0;
};

inline CostModelCounts comparator_cost_model(std::uint64_t pieces) {
  CostModelCounts c;
  c.or_gates = pieces;
  c.adder_gates = pieces * ceil_log2(pieces) / 2;
  c.total = c.or_gates + c.adder_gates;
  return c;
}

// ---- garbling ----------------------------------------------------------------

using GarbledRow = std::array<std::uint8_t, 24>;  // 16-byte label + 8-byte tag

inline GarbledRow gc_prf(const Label& a, const Label& b, std::uint32_t gate_id) {
  ByteWriter w;
  w.raw(a.data(), a.size());
  w.raw(b.data(), b.size());
  w.u32(gate_id);
  Digest d = sha256(w.bytes());
  GarbledRow row;
  std::copy(d.begin(), d.begin() + row.size(), row.begin());
  return row;
}

inline std::uint64_t label_hash(const Label& l) {
  Digest d = sha256(l.data(), l.size());
  std::uint64_t h = 0;
  for (int i = 0; i < 8; ++i) h = (h << 8) | d[i];
  return h;
}

// What the evaluator receives (besides input labels): tables plus per-output
// label hashes for decoding.
struct GarbledMaterial {
  std::vector<std::array<GarbledRow, 4>> tables;          // one per AND gate
  std::vector<std::pair<std::uint64_t, std::uint64_t>> output_hashes;

  std::uint64_t bytes() const {
    return tables.size() * 4 * sizeof(GarbledRow) + output_hashes.size() * 16;
  }
};

// Garbler-side result: the material to hand over plus the secrets needed to
// pick input labels and decode outputs.
struct GarbledCircuit {
  Label offset{};             // R, lsb = 1
  std::vector<Label> zero;    // per-wire FALSE label
  GarbledMaterial material;

  Label input_label(std::uint32_t wire, int bit) const {
    return bit ? label_xor(zero[wire], offset) : zero[wire];
  }
};

inline GarbledCircuit garble(const Circuit& c, SplitPrg& prg) {
  GarbledCircuit g;
  g.offset = random_label(prg);
  g.offset[15] |= 1;
  g.zero.assign(c.n_wires, Label{});
  std::vector<bool> defined(c.n_wires, false);
  auto fresh = [&](std::uint32_t w) {
    g.zero[w] = random_label(prg);
    defined[w] = true;
  };
  fresh(c.const_one);
  for (std::uint32_t w : c.garbler_inputs) fresh(w);
  for (std::uint32_t w : c.evaluator_inputs) fresh(w);

  for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
    const Gate& gate = c.gates[gi];
    if (!defined[gate.a] || !defined[gate.b])
      throw InvalidArgument("garble: gate input wire not yet defined");
    if (gate.op == GateOp::Xor) {
      g.zero[gate.out] = label_xor(g.zero[gate.a], g.zero[gate.b]);
      defined[gate.out] = true;
      continue;
    }
    fresh(gate.out);
    std::array<GarbledRow, 4> table{};
    for (int va = 0; va <= 1; ++va)
      for (int vb = 0; vb <= 1; ++vb) {
        Label la = va ? label_xor(g.zero[gate.a], g.offset) : g.zero[gate.a];
        Label lb = vb ? label_xor(g.zero[gate.b], g.offset) : g.zero[gate.b];
        Label lo = (va & vb) ? label_xor(g.zero[gate.out], g.offset) : g.zero[gate.out];
        GarbledRow row = gc_prf(la, lb, static_cast<std::uint32_t>(gi));
        for (int i = 0; i < 16; ++i) row[i] ^= lo[i];
        table[2 * label_lsb(la) + label_lsb(lb)] = row;
      }
    g.material.tables.push_back(table);
  }

  for (std::uint32_t w : c.outputs)
    g.material.output_hashes.emplace_back(label_hash(g.zero[w]),
                                          label_hash(label_xor(g.zero[w], g.offset)));
  return g;
}

// Evaluator walk. `inputs` must assign a label to const_one and every input
// wire; returns the labels on the output wires.
inline std::vector<Label> evaluate(const Circuit& c, const GarbledMaterial& material,
                                   const std::vector<std::pair<std::uint32_t, Label>>& inputs) {
  std::vector<Label> wire(c.n_wires, Label{});
  std::vector<bool> have(c.n_wires, false);
  for (const auto& [w, l] : inputs) {
    wire[w] = l;
    have[w] = true;
  }
  std::size_t and_idx = 0;
  for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
    const Gate& gate = c.gates[gi];
    if (!have[gate.a] || !have[gate.b]) throw ProtocolError("evaluate: missing input label");
    if (gate.op == GateOp::Xor) {
      wire[gate.out] = label_xor(wire[gate.a], wire[gate.b]);
    } else {
      if (and_idx >= material.tables.size()) throw IntegrityError("evaluate: table underrun");
      const GarbledRow& row =
          material.tables[and_idx++][2 * label_lsb(wire[gate.a]) + label_lsb(wire[gate.b])];
      GarbledRow mask = gc_prf(wire[gate.a], wire[gate.b], static_cast<std::uint32_t>(gi));
      Label out{};
      for (int i = 0; i < 16; ++i) out[i] = row[i] ^ mask[i];
      for (int i = 16; i < 24; ++i)
        if ((row[i] ^ mask[i]) != 0) throw IntegrityError("evaluate: bad row tag");
      wire[gate.out] = out;
    }
    have[gate.out] = true;
  }
  if (and_idx != material.tables.size()) throw IntegrityError("evaluate: unused tables");
  std::vector<Label> out;
  for (std::uint32_t w : c.outputs) {
    if (!have[w]) throw ProtocolError("evaluate: output wire unset");
    out.push_back(wire[w]);
  }
  return out;
}

inline int decode_bit(const std::pair<std::uint64_t, std::uint64_t>& hashes, const Label& l) {
  std::uint64_t h = label_hash(l);
  if (h == hashes.first) return 0;
  if (h == hashes.second) return 1;
  throw IntegrityError("decode_bit: label matches neither output hash");
}

// Little-endian output wires -> integer.
inline std::uint64_t decode_count(const GarbledMaterial& material,
                                  const std::vector<Label>& out_labels) {
  if (out_labels.size() != material.output_hashes.size())
    throw InvalidArgument("decode_count: label/hash count mismatch");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < out_labels.size(); ++i)
    v |= static_cast<std::uint64_t>(decode_bit(material.output_hashes[i], out_labels[i])) << i;
  return v;
}

// The independent reference for the whole comparison pipeline.
inline std::uint64_t plaintext_match_count(const std::vector<std::uint32_t>& predicted,
                                           const std::vector<std::uint32_t>& actual) {
  if (predicted.size() != actual.size())
    throw InvalidArgument("plaintext_match_count: size mismatch");
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) n += predicted[i] == actual[i];
  return n;
}

}  // namespace pofl
