#pragma once

// Scenario orchestration. A consensus round wires every module together:
//
//   1. a synthetic training task and an eval set are generated for the round;
//   2. each pool runs the reverse-game trade at its current reputation and
//      draws whether it obtains the full dataset or only a reduced share;
//   3. the pool trains its model by federated batch gradient descent;
//   4. the model is verified privately: masked first-layer label prediction
//      under additive HE, then a garbled comparison circuit (labels moved by
//      OT) counts matches against the requester's labels;
//   5. the highest truthfully-claimed verified accuracy wins the round and
//      appends a block carrying trade/leak/reward transactions;
//   6. leak events (if configured) cut the offender's reputation for the
//      following rounds.
//
// Everything is driven by one seed through forked PRG streams, so a config
// plus seed reproduces byte-identical chain dumps, CSVs and reports.

#include <json.hpp>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "pofl/chain.hpp"
#include "pofl/errors.hpp"
#include "pofl/fedmining.hpp"
#include "pofl/gc.hpp"
#include "pofl/hash.hpp"
#include "pofl/he_verify.hpp"
#include "pofl/ot.hpp"
#include "pofl/paillier.hpp"
#include "pofl/toml.hpp"
#include "pofl/trading.hpp"

namespace pofl {

struct SimConfig {
  // [sim]
  std::uint64_t seed = 1;
  int rounds = 3;
  int pools = 3;
  double initial_reputation = 0.5;
  double leak_probability = 0.0;
  double block_reward = 12.5;
  std::string inflate_pool;  // optional: this pool overclaims and must lose
  int inflate_by = 0;

  // [trading] (r is injected per pool from the reputation ledger)
  TradingParams trading;

  // [training]
  int miners = 4;
  int train_samples = 96;
  int eval_samples = 48;
  int features = 3;
  double noise = 0.02;
  double zeta = 0.35;
  int epochs = 40;
  double accuracy_tau = 0.25;

  // [verify]
  unsigned he_key_bits = 2048;
  int label_bits = 1;  // binary labels in round flow
  std::string ot_backend = "dealer";  // "dealer" | "co15"

  static SimConfig from_toml(const TomlTable& t) {
    SimConfig c;
    c.seed = static_cast<std::uint64_t>(t.get_int("sim.seed", 1));
    c.rounds = static_cast<int>(t.get_int("sim.rounds", 3));
    c.pools = static_cast<int>(t.get_int("sim.pools", 3));
    c.initial_reputation = t.get_double("sim.initial_reputation", 0.5);
    c.leak_probability = t.get_double("sim.leak_probability", 0.0);
    c.block_reward = t.get_double("sim.block_reward", 12.5);
    c.inflate_pool = t.get_string("sim.inflate_pool", "");
    c.inflate_by = static_cast<int>(t.get_int("sim.inflate_by", 0));

    c.trading.eps1 = t.get_double("trading.eps1", c.trading.eps1);
    c.trading.eps2 = t.get_double("trading.eps2", c.trading.eps2);
    c.trading.eta = t.get_double("trading.eta", c.trading.eta);
    c.trading.alpha = t.get_double("trading.alpha", c.trading.alpha);
    c.trading.beta = t.get_double("trading.beta", c.trading.beta);
    c.trading.alpha_t = t.get_double("trading.alpha_t", c.trading.alpha_t);
    c.trading.beta_t = t.get_double("trading.beta_t", c.trading.beta_t);
    c.trading.q = t.get_double("trading.q", c.trading.q);
    c.trading.m_bar = t.get_double("trading.m_bar", c.trading.m_bar);
    c.trading.ds_bar = t.get_double("trading.ds_bar", c.trading.ds_bar);

    c.miners = static_cast<int>(t.get_int("training.miners", 4));
    c.train_samples = static_cast<int>(t.get_int("training.train_samples", 96));
    c.eval_samples = static_cast<int>(t.get_int("training.eval_samples", 48));
    c.features = static_cast<int>(t.get_int("training.features", 3));
    c.noise = t.get_double("training.noise", 0.02);
    c.zeta = t.get_double("training.zeta", 0.35);
    c.epochs = static_cast<int>(t.get_int("training.epochs", 40));
    c.accuracy_tau = t.get_double("training.accuracy_tau", 0.25);

    c.he_key_bits = static_cast<unsigned>(t.get_int("verify.he_key_bits", 2048));
    c.label_bits = static_cast<int>(t.get_int("verify.label_bits", 1));
    c.ot_backend = t.get_string("verify.ot_backend", "dealer");
    return c;
  }

  void validate() const {
    if (rounds < 1 || pools < 1) throw InvalidArgument("config: rounds and pools must be >= 1");
    if (miners < 1 || train_samples < miners)
      throw InvalidArgument("config: need at least one sample per miner");
    if (eval_samples < 1 || features < 1) throw InvalidArgument("config: bad task dimensions");
    if (epochs < 1 || !(zeta > 0)) throw InvalidArgument("config: bad training settings");
    if (he_key_bits < 512) throw InvalidArgument("config: he_key_bits must be >= 512");
    if (label_bits != 1) throw InvalidArgument("config: round flow uses binary labels");
    if (ot_backend != "dealer" && ot_backend != "co15")
      throw InvalidArgument("config: unknown ot_backend");
    if (!(initial_reputation >= 0 && initial_reputation <= 1) ||
        !(leak_probability >= 0 && leak_probability <= 1))
      throw InvalidArgument("config: probabilities outside [0,1]");
    TradingParams probe = trading;
    probe.r = initial_reputation;
    // Concavity does not depend on r, so one check covers all reputations.
    if (!GameCoeffs::from(probe).pool_concave())
      throw InvalidArgument("config: trading parameters give a non-concave pool objective");
  }
};

// Wrap a trained scorer as the two-layer net the verification protocol
// expects: one hidden node carrying the linear score, two output labels
// implementing the threshold score > 0 (sigmoid > 1/2).
inline FeedforwardNet net_from_linear(const LinearModel& model) {
  if (model.n_outputs != 1 || model.n_features < 2)
    throw InvalidArgument("net_from_linear: expects a single-output model with bias column");
  FeedforwardNet net;
  net.n_attrs = model.n_features - 1;
  net.n_hidden = 1;
  net.n_labels = 2;
  net.w1.assign(model.w.begin() + 1, model.w.end());
  net.b1 = {model.w[0]};
  net.w2 = {-1.0, 1.0};
  net.b2 = {0.5, -0.5};
  return net;
}

struct PoolRoundStats {
  std::string pool_id;
  double reputation = 0;
  TradeQuote quote;
  double final_train_loss = 0;
  std::uint64_t claimed_accuracy = 0;
  std::uint64_t verified_accuracy = 0;
  std::uint64_t he_bytes = 0, ot_bytes = 0, gc_bytes = 0;
  bool leak_event = false;
  std::uint64_t timestamp = 0;
};

struct RoundReport {
  std::uint64_t round = 0;
  std::string winner;
  std::uint64_t winner_accuracy = 0;
  double winner_train_loss = 0;
  std::vector<PoolRoundStats> pools;
  std::string block_hash;
  std::vector<EpochStats> winner_curve;
};

struct SimResult {
  Chain chain;
  std::vector<RoundReport> rounds;
};

inline Bytes serialize_model(const LinearModel& m) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.n_features));
  w.u32(static_cast<std::uint32_t>(m.n_outputs));
  for (double v : m.w) w.f64(v);
  return w.take();
}

// Private verification of one model against one eval set; returns the match
// count plus exact byte counts of each phase.
struct VerifyOutcome {
  std::uint64_t matches = 0;
  std::uint64_t he_bytes = 0, ot_bytes = 0, gc_bytes = 0;
};

inline VerifyOutcome verify_model(const FeedforwardNet& net, const TestMatrix& data,
                                  const PaillierKeyPair& kp, int label_bits,
                                  const std::string& ot_backend, SplitPrg& prg) {
  VerifyOutcome out;
  SplitPrg req_prg = prg.fork("he-requester");
  SplitPrg pool_prg = prg.fork("he-pool");
  MaskedInferenceResult he = masked_label_prediction(net, data, kp, req_prg, pool_prg);
  out.he_bytes = he.total_bytes();

  const std::uint32_t pieces = static_cast<std::uint32_t>(data.rows.size());
  const std::uint32_t lb = static_cast<std::uint32_t>(label_bits);
  Circuit circuit = build_label_compare(pieces, lb);
  SplitPrg garble_prg = prg.fork("garble");
  GarbledCircuit gcir = garble(circuit, garble_prg);

  // Evaluator obtains its input labels (actual-label bits) through OT.
  std::vector<std::pair<Label, Label>> msgs;
  std::vector<int> choices;
  for (std::uint32_t i = 0; i < pieces; ++i)
    for (std::uint32_t j = 0; j < lb; ++j) {
      std::uint32_t wire = circuit.evaluator_inputs[i * lb + j];
      msgs.emplace_back(gcir.input_label(wire, 0), gcir.input_label(wire, 1));
      choices.push_back((data.labels[i] >> j) & 1);
    }
  OtBatchResult ot;
  if (ot_backend == "co15") {
    SplitPrg s = prg.fork("ot-sender"), r = prg.fork("ot-receiver");
    ot = ot_co15(msgs, choices, s, r);
  } else {
    SplitPrg d = prg.fork("ot-dealer");
    ot = ot_dealer(msgs, choices, d);
  }
  out.ot_bytes = ot.bytes;

  std::vector<std::pair<std::uint32_t, Label>> inputs;
  inputs.emplace_back(circuit.const_one, gcir.input_label(circuit.const_one, 1));
  for (std::uint32_t i = 0; i < pieces; ++i)
    for (std::uint32_t j = 0; j < lb; ++j) {
      std::uint32_t wire = circuit.garbler_inputs[i * lb + j];
      inputs.emplace_back(wire, gcir.input_label(wire, (he.predicted[i] >> j) & 1));
    }
  for (std::size_t k = 0; k < msgs.size(); ++k)
    inputs.emplace_back(circuit.evaluator_inputs[k], ot.received[k]);

  std::vector<Label> out_labels = evaluate(circuit, gcir.material, inputs);
  out.matches = decode_count(gcir.material, out_labels);
  // Handed to the evaluator: tables+decode info, garbler input labels, const.
  out.gc_bytes = gcir.material.bytes() + (circuit.garbler_inputs.size() + 1) * sizeof(Label);
  return out;
}

inline SimResult run_simulation(const SimConfig& cfg) {
  cfg.validate();
  SimResult res;
  ReputationLedger ledger(cfg.initial_reputation);
  SplitPrg root(cfg.seed, "pofl-sim");

  for (int round = 0; round < cfg.rounds; ++round) {
    SplitPrg round_prg = root.fork("round-" + std::to_string(round));
    SplitPrg task_prg = round_prg.fork("task");
    SyntheticTask task = make_synthetic_task(
        task_prg, static_cast<std::size_t>(cfg.train_samples),
        static_cast<std::size_t>(cfg.eval_samples), static_cast<std::size_t>(cfg.features), 1,
        cfg.noise);
    SplitPrg key_prg = round_prg.fork("keys");
    PaillierKeyPair kp = paillier_keygen(key_prg, cfg.he_key_bits);

    // Requester-side view of the eval set: raw attributes, binary labels.
    TestMatrix data;
    data.n_attrs = static_cast<std::size_t>(cfg.features);
    for (std::size_t i = 0; i < task.eval.size(); ++i) {
      data.rows.emplace_back(task.eval.x[i].begin() + 1, task.eval.x[i].end());
      data.labels.push_back(task.eval.y[i][0] > 0 ? 1 : 0);
    }

    RoundReport report;
    report.round = static_cast<std::uint64_t>(round);
    std::vector<Candidate> candidates;
    std::vector<TrainResult> trainings;

    for (int p = 0; p < cfg.pools; ++p) {
      std::string pool_id = "pool-" + std::to_string(p);
      SplitPrg pool_prg = round_prg.fork(pool_id);
      PoolRoundStats st;
      st.pool_id = pool_id;
      st.reputation = ledger.get(pool_id);

      TradingParams tp = cfg.trading;
      tp.r = st.reputation;
      SplitPrg trade_prg = pool_prg.fork("trade");
      st.quote = make_quote(tp, trade_prg);

      // A failed trade leaves the pool with only part of the corpus.
      std::vector<Dataset> shards =
          shard_dataset(task.train, static_cast<std::size_t>(cfg.miners));
      if (!st.quote.accepted) shards.resize((shards.size() + 1) / 2);
      TrainResult tr =
          federated_train(LinearModel::zeros(task.train.n_features, 1), shards, task.eval,
                          cfg.zeta, static_cast<std::size_t>(cfg.epochs), cfg.accuracy_tau);
      st.final_train_loss = tr.epochs.back().train_loss;

      SplitPrg verify_prg = pool_prg.fork("verify");
      VerifyOutcome v = verify_model(net_from_linear(tr.model), data, kp, cfg.label_bits,
                                     cfg.ot_backend, verify_prg);
      st.verified_accuracy = v.matches;
      st.claimed_accuracy = v.matches;
      if (pool_id == cfg.inflate_pool)
        st.claimed_accuracy += static_cast<std::uint64_t>(cfg.inflate_by);
      st.he_bytes = v.he_bytes;
      st.ot_bytes = v.ot_bytes;
      st.gc_bytes = v.gc_bytes;

      SplitPrg leak_prg = pool_prg.fork("leak");
      st.leak_event = leak_prg.uniform_double() < cfg.leak_probability;

      SplitPrg ts_prg = pool_prg.fork("timestamp");
      st.timestamp =
          static_cast<std::uint64_t>(round) * 100000 + ts_prg.uniform_u64(99000);

      Candidate cand;
      cand.pool_id = pool_id;
      cand.claimed_accuracy = st.claimed_accuracy;
      cand.verified_accuracy = st.verified_accuracy;
      cand.timestamp = st.timestamp;
      cand.model_hash = sha256(serialize_model(tr.model));
      candidates.push_back(cand);
      report.pools.push_back(std::move(st));
      trainings.push_back(std::move(tr));
    }

    auto widx = elect_winner(candidates);
    if (!widx) throw ProtocolError("round " + std::to_string(round) + ": no truthful candidate");
    const Candidate& win = candidates[*widx];
    report.winner = win.pool_id;
    report.winner_accuracy = win.verified_accuracy;
    report.winner_train_loss = report.pools[*widx].final_train_loss;
    report.winner_curve = trainings[*widx].epochs;

    std::vector<Bytes> txs;
    for (const PoolRoundStats& st : report.pools)
      txs.push_back(Tx::trade("provider", st.pool_id, st.quote.price, st.quote.p,
                              st.quote.accepted)
                        .encode());
    for (const PoolRoundStats& st : report.pools)
      if (st.leak_event) txs.push_back(Tx::leak(st.pool_id).encode());
    txs.push_back(Tx::reward(win.pool_id, cfg.block_reward).encode());

    const Block& blk = res.chain.append(report.round, win.timestamp + 1, win.pool_id,
                                        win.verified_accuracy, std::move(txs));
    report.block_hash = digest_hex(block_hash(blk.header));

    for (const PoolRoundStats& st : report.pools)
      if (st.leak_event) ledger.apply(Tx::leak(st.pool_id));
    res.rounds.push_back(std::move(report));
  }
  return res;
}

// ---- parameter sweeps ---------------------------------------------------------

struct SweepRow {
  std::string axis;
  double value = 0;
  Equilibrium eq;
};

// The leak-gain coefficients of the pool are the provider's leak-loss seen
// from the other side, so the alpha/beta axes move both together.
inline TradingParams apply_axis(TradingParams t, const std::string& axis, double v) {
  if (axis == "r") t.r = v;
  else if (axis == "q") t.q = v;
  else if (axis == "eps1") t.eps1 = v;
  else if (axis == "eps2") t.eps2 = v;
  else if (axis == "eta") t.eta = v;
  else if (axis == "m_bar") t.m_bar = v;
  else if (axis == "ds_bar") t.ds_bar = v;
  else if (axis == "alpha" || axis == "alpha_t") t.alpha = t.alpha_t = v;
  else if (axis == "beta" || axis == "beta_t") t.beta = t.beta_t = v;
  else throw InvalidArgument("sweep: unknown axis '" + axis + "'");
  return t;
}

inline std::vector<SweepRow> run_sweep(const TradingParams& base, const std::string& axis,
                                       const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("sweep: empty value list");
  std::vector<SweepRow> rows;
  for (double v : values) {
    SweepRow row;
    row.axis = axis;
    row.value = v;
    row.eq = solve_equilibrium(apply_axis(base, axis, v));
    rows.push_back(row);
  }
  return rows;
}

// ---- verification cost sweep ---------------------------------------------------

struct CostRow {
  std::uint64_t pieces = 0;
  std::uint64_t he_bytes = 0, ot_bytes = 0, gc_bytes = 0;
  std::uint64_t gc_model_gates = 0;  // closed-form non-free gate count
};

inline std::vector<CostRow> run_cost_sweep(const std::vector<std::uint64_t>& pieces,
                                           unsigned key_bits, int label_bits, SplitPrg& prg) {
  SplitPrg key_prg = prg.fork("keys");
  PaillierKeyPair kp = paillier_keygen(key_prg, key_bits);
  SplitPrg net_prg = prg.fork("net");
  FeedforwardNet net = FeedforwardNet::random(net_prg, 1, 1, 1u << label_bits);
  std::vector<CostRow> rows;
  for (std::uint64_t n : pieces) {
    SplitPrg it_prg = prg.fork("pieces-" + std::to_string(n));
    SplitPrg data_prg = it_prg.fork("data");
    TestMatrix data = TestMatrix::random(data_prg, n, 1, 1u << label_bits);
    SplitPrg verify_prg = it_prg.fork("verify");
    VerifyOutcome v = verify_model(net, data, kp, label_bits, "dealer", verify_prg);
    CostRow row;
    row.pieces = n;
    row.he_bytes = v.he_bytes;
    row.ot_bytes = v.ot_bytes;
    row.gc_bytes = v.gc_bytes;
    row.gc_model_gates = comparator_cost_model(n).total;
    rows.push_back(row);
  }
  return rows;
}

struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
};

inline LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw InvalidArgument("least_squares: bad input");
  double n = static_cast<double>(xs.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  LineFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, mean = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double pred = f.intercept + f.slope * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean) * (ys[i] - mean);
  }
  f.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return f;
}

// ---- emission -------------------------------------------------------------------

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "axis,value,m_star,ds_star,p,pool_utility,provider_utility\n";
  for (const SweepRow& r : rows) {
    out += r.axis + "," + fmt_double(r.value) + "," + fmt_double(r.eq.m_star) + "," +
           fmt_double(r.eq.ds_star) + "," + fmt_double(r.eq.p_raw) + "," +
           fmt_double(r.eq.pool_utility) + "," + fmt_double(r.eq.provider_utility) + "\n";
  }
  return out;
}

inline std::string rounds_csv(const SimResult& res) {
  std::string out =
      "round,winner,accuracy,train_loss,trade_price,trade_accepted,he_bytes,ot_bytes,gc_bytes\n";
  for (const RoundReport& r : res.rounds) {
    const PoolRoundStats* win = nullptr;
    for (const PoolRoundStats& st : r.pools)
      if (st.pool_id == r.winner) win = &st;
    if (!win) throw IntegrityError("rounds_csv: winner stats missing");
    char buf[256];
    std::snprintf(buf, sizeof buf, "%" PRIu64 ",%s,%" PRIu64 ",%s,%s,%d,%" PRIu64 ",%" PRIu64
                                   ",%" PRIu64 "\n",
                  r.round, r.winner.c_str(), r.winner_accuracy,
                  fmt_double(win->final_train_loss).c_str(), fmt_double(win->quote.price).c_str(),
                  win->quote.accepted ? 1 : 0, win->he_bytes, win->ot_bytes, win->gc_bytes);
    out += buf;
  }
  return out;
}

inline std::string convergence_csv(const std::vector<EpochStats>& curve) {
  std::string out = "epoch,loss,accuracy\n";
  for (std::size_t e = 0; e < curve.size(); ++e)
    out += std::to_string(e + 1) + "," + fmt_double(curve[e].train_loss) + "," +
           fmt_double(curve[e].eval_accuracy) + "\n";
  return out;
}

inline std::string cost_csv(const std::vector<CostRow>& rows) {
  std::string out = "pieces,he_bytes,ot_bytes,gc_bytes,gc_model_gates\n";
  for (const CostRow& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64 ",%" PRIu64 "\n",
                  r.pieces, r.he_bytes, r.ot_bytes, r.gc_bytes, r.gc_model_gates);
    out += buf;
  }
  return out;
}

inline nlohmann::json round_report_json(const RoundReport& r) {
  nlohmann::json pools = nlohmann::json::array();
  for (const PoolRoundStats& st : r.pools) {
    pools.push_back({{"pool", st.pool_id},
                     {"reputation", st.reputation},
                     {"bid", st.quote.m},
                     {"markup", st.quote.ds},
                     {"price", st.quote.price},
                     {"trade_probability", st.quote.p},
                     {"trade_accepted", st.quote.accepted},
                     {"train_loss", st.final_train_loss},
                     {"claimed_accuracy", st.claimed_accuracy},
                     {"verified_accuracy", st.verified_accuracy},
                     {"he_bytes", st.he_bytes},
                     {"ot_bytes", st.ot_bytes},
                     {"gc_bytes", st.gc_bytes},
                     {"leak_event", st.leak_event},
                     {"timestamp", st.timestamp}});
  }
  return nlohmann::json{{"round", r.round},
                        {"winner", r.winner},
                        {"winner_accuracy", r.winner_accuracy},
                        {"winner_train_loss", r.winner_train_loss},
                        {"block_hash", r.block_hash},
                        {"pools", pools}};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InvalidArgument("short write: " + path);
}

inline void write_file(const std::string& path, const Bytes& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(content.data()),
            static_cast<std::streamsize>(content.size()));
  if (!out) throw InvalidArgument("short write: " + path);
}

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open: " + path);
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

}  // namespace pofl
