#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "pofl/sim.hpp"

using namespace pofl;
using Catch::Matchers::WithinAbs;

TEST_CASE("toml subset: tables, types, comments, escapes") {
  TomlTable t = TomlTable::parse(
      "top = 1  # trailing comment\n"
      "\n"
      "[alpha]\n"
      "count = 42\n"
      "ratio = 2.5\n"
      "flag = true\n"
      "name = \"po#ol \\\"x\\\"\\n\"\n"
      "vals = [1, 2.5, 3]\n"
      "[beta]\n"
      "count = -7\n");
  CHECK(t.get_int("top") == 1);
  CHECK(t.get_int("alpha.count") == 42);
  CHECK(t.get_double("alpha.ratio") == 2.5);
  CHECK(t.get_double("alpha.count") == 42.0);  // int usable as double
  CHECK(t.get_bool("alpha.flag"));
  CHECK(t.get_string("alpha.name") == "po#ol \"x\"\n");
  CHECK(t.get_double_array("alpha.vals") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(t.get_int("beta.count") == -7);
  CHECK(t.get_int("beta.missing", 5) == 5);
  CHECK(!t.has("gamma.count"));
}

TEST_CASE("toml subset: malformed input is refused with line numbers") {
  auto fails_with = [](const std::string& text, const std::string& needle) {
    CHECK_THROWS_WITH(TomlTable::parse(text), Catch::Matchers::ContainsSubstring(needle));
  };
  fails_with("x 1\n", "expected key = value");
  fails_with("[t]\nx = 1\nx = 2\n", "duplicate key");
  fails_with("s = \"abc\n", "unterminated string");
  fails_with("a = [1, \"x\"]\n", "mixed array element types");
  fails_with("n = 1z\n", "trailing characters");
  fails_with("n = zebra\n", "cannot parse value");
  fails_with("[[t]]\nx = 1\n", "malformed table header");
  fails_with("x = \n", "empty key or value");
  fails_with("a = [1, , 2]\n", "empty array element");

  try {
    TomlTable::parse("ok = 1\nbad\n");
    FAIL("expected a throw");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  CHECK_THROWS_AS(TomlTable::parse_file("/nonexistent/b.toml"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("x = 1\n").get_string("x"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("x = 1\n").get("y"), InvalidArgument);
}

TEST_CASE("config loading applies defaults and validates") {
  SimConfig dflt = SimConfig::from_toml(TomlTable::parse(""));
  CHECK(dflt.rounds == 3);
  CHECK(dflt.he_key_bits == 2048);
  CHECK(dflt.trading.q == 8.0);
  CHECK_NOTHROW(dflt.validate());

  SimConfig cfg = SimConfig::from_toml(TomlTable::parse(
      "[sim]\nseed = 9\nrounds = 2\npools = 2\n"
      "[trading]\nq = 4.0\n"
      "[training]\nminers = 2\ntrain_samples = 24\neval_samples = 12\n"
      "[verify]\nhe_key_bits = 512\not_backend = \"co15\"\n"));
  CHECK(cfg.seed == 9);
  CHECK(cfg.trading.q == 4.0);
  CHECK(cfg.trading.eta == 1.8);  // untouched default
  CHECK(cfg.ot_backend == "co15");
  CHECK_NOTHROW(cfg.validate());

  SimConfig bad = cfg;
  bad.ot_backend = "smoke-signals";
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.trading.beta = 0.1;  // non-concave provider objective
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.train_samples = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("linear scorer wraps into the verification net faithfully") {
  SplitPrg prg(600, "sim-bridge");
  SyntheticTask task = make_synthetic_task(prg, 40, 20, 3, 1, 0.05);
  TrainResult tr = federated_train(LinearModel::zeros(task.train.n_features, 1),
                                   shard_dataset(task.train, 4), task.eval, 0.3, 30, 0.25);
  FeedforwardNet net = net_from_linear(tr.model);
  CHECK(net.n_attrs == 3);
  CHECK(net.n_labels == 2);
  for (std::size_t i = 0; i < task.eval.size(); ++i) {
    std::vector<double> attrs(task.eval.x[i].begin() + 1, task.eval.x[i].end());
    double score = tr.model.predict(task.eval.x[i])[0];
    std::uint32_t label = plaintext_infer(net, attrs);
    // The net thresholds the same score at zero, up to fixed-point rounding.
    if (std::fabs(score) > 1e-4) CHECK(label == (score > 0 ? 1u : 0u));
  }

  LinearModel two_out = LinearModel::zeros(4, 2);
  CHECK_THROWS_AS(net_from_linear(two_out), InvalidArgument);
}

TEST_CASE("equilibrium sweeps move the documented directions") {
  TradingParams stock;

  SECTION("reputation axis: likelihood never drops") {
    std::vector<double> rs;
    for (double r = 0.1; r < 0.95; r += 0.1) rs.push_back(r);
    std::vector<SweepRow> rows = run_sweep(stock, "r", rs);
    REQUIRE(rows.size() == rs.size());
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].eq.p_raw >= rows[i - 1].eq.p_raw - 1e-12);
  }
  SECTION("legal-profit axis: everything rises") {
    std::vector<SweepRow> rows = run_sweep(stock, "q", {2, 4, 6, 8, 10});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      CHECK(rows[i].eq.p_raw > rows[i - 1].eq.p_raw);
      CHECK(rows[i].eq.pool_utility > rows[i - 1].eq.pool_utility);
      CHECK(rows[i].eq.provider_utility > rows[i - 1].eq.provider_utility);
    }
  }
  SECTION("leak-value axis: likelihood never rises") {
    std::vector<SweepRow> rows = run_sweep(stock, "beta_t", {1.0, 1.2, 1.4, 1.6, 1.8, 2.0});
    for (std::size_t i = 1; i < rows.size(); ++i)
      CHECK(rows[i].eq.p_raw <= rows[i - 1].eq.p_raw + 1e-12);
  }
  SECTION("joint coefficient axes move both sides") {
    TradingParams t = apply_axis(stock, "beta_t", 1.3);
    CHECK(t.beta == 1.3);
    CHECK(t.beta_t == 1.3);
    t = apply_axis(stock, "alpha", 2.0);
    CHECK(t.alpha == 2.0);
    CHECK(t.alpha_t == 2.0);
  }
  SECTION("unknown axis and empty values are usage errors") {
    CHECK_THROWS_AS(run_sweep(stock, "gravity", {1.0}), InvalidArgument);
    CHECK_THROWS_AS(run_sweep(stock, "r", {}), InvalidArgument);
  }
}

TEST_CASE("csv headers are frozen") {
  TradingParams stock;
  std::string sweep = sweep_csv(run_sweep(stock, "q", {4, 8}));
  CHECK(sweep.rfind("axis,value,m_star,ds_star,p,pool_utility,provider_utility\n", 0) == 0);
  CHECK(sweep.find("\nq,8,") != std::string::npos);

  std::vector<EpochStats> curve = {{0.5, 0.25}, {0.25, 0.5}};
  CHECK(convergence_csv(curve) ==
        "epoch,loss,accuracy\n1,0.5,0.25\n2,0.25,0.5\n");

  std::vector<CostRow> cost = {{100, 1000, 3300, 9600, 450}};
  CHECK(cost_csv(cost) ==
        "pieces,he_bytes,ot_bytes,gc_bytes,gc_model_gates\n100,1000,3300,9600,450\n");
}

TEST_CASE("least squares recovers exact lines") {
  LineFit f = least_squares({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK_THAT(f.slope, WithinAbs(2.0, 1e-12));
  CHECK_THAT(f.intercept, WithinAbs(1.0, 1e-12));
  CHECK_THAT(f.r2, WithinAbs(1.0, 1e-12));

  LineFit noisy = least_squares({1, 2, 3, 4}, {3, 5.5, 6.5, 9});
  CHECK(noisy.r2 < 1.0);
  CHECK(noisy.r2 > 0.9);

  CHECK_THROWS_AS(least_squares({1}, {2}), InvalidArgument);
}

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.seed = 77;
  cfg.rounds = 2;
  cfg.pools = 2;
  cfg.miners = 2;
  cfg.train_samples = 24;
  cfg.eval_samples = 12;
  cfg.features = 2;
  cfg.epochs = 15;
  cfg.he_key_bits = 512;
  return cfg;
}

}  // namespace

TEST_CASE("a small simulation produces a valid, reproducible chain") {
  SimConfig cfg = small_config();
  SimResult a = run_simulation(cfg);
  SimResult b = run_simulation(cfg);

  REQUIRE(a.rounds.size() == 2);
  CHECK(a.chain.blocks().size() == 2);
  CHECK_NOTHROW(a.chain.verify());
  CHECK(a.chain.serialize() == b.chain.serialize());
  CHECK(rounds_csv(a) == rounds_csv(b));
  for (std::size_t r = 0; r < a.rounds.size(); ++r)
    CHECK(round_report_json(a.rounds[r]).dump() == round_report_json(b.rounds[r]).dump());

  SimConfig other = cfg;
  other.seed = 78;
  SimResult c = run_simulation(other);
  CHECK(a.chain.serialize() != c.chain.serialize());

  for (const RoundReport& r : a.rounds) {
    CHECK(!r.winner.empty());
    CHECK(r.winner_accuracy <= 12);
    REQUIRE(r.pools.size() == 2);
    for (const PoolRoundStats& st : r.pools) {
      CHECK(st.claimed_accuracy == st.verified_accuracy);  // honest pools
      CHECK(st.he_bytes > 0);
      CHECK(st.ot_bytes > 0);
      CHECK(st.gc_bytes > 0);
    }
    // The elected winner is the best verified candidate.
    for (const PoolRoundStats& st : r.pools) CHECK(st.verified_accuracy <= r.winner_accuracy);
  }

  nlohmann::json j = round_report_json(a.rounds[0]);
  CHECK(j["round"] == 0);
  CHECK(j["pools"].size() == 2);
  CHECK(j.contains("block_hash"));
}

TEST_CASE("an inflated claim never wins") {
  SimConfig cfg = small_config();
  cfg.pools = 3;
  cfg.inflate_pool = "pool-1";
  cfg.inflate_by = 5;
  SimResult res = run_simulation(cfg);
  for (const RoundReport& r : res.rounds) {
    CHECK(r.winner != "pool-1");
    for (const PoolRoundStats& st : r.pools)
      if (st.pool_id == "pool-1") CHECK(st.claimed_accuracy == st.verified_accuracy + 5);
  }
}

TEST_CASE("leaks feed back into the next round's trade") {
  SimConfig cfg = small_config();
  cfg.rounds = 2;
  cfg.leak_probability = 1.0;  // everyone leaks every round
  // Asymmetric leak coefficients make the trade likelihood rise with
  // reputation, so losing reputation must lower it.
  cfg.trading.eps1 = 0.2;
  cfg.trading.eps2 = 0.4;
  cfg.trading.alpha = 0.5;
  cfg.trading.beta = 1.2;
  cfg.trading.q = 1.6;
  cfg.trading.alpha_t = 0.1;
  cfg.trading.beta_t = 1.25;
  SimResult res = run_simulation(cfg);

  ReputationLedger replay = res.chain.replay_reputation(cfg.initial_reputation);
  CHECK_THAT(replay.get("pool-0"), WithinAbs(0.3, 1e-12));  // two leaks applied

  for (const PoolRoundStats& st : res.rounds[0].pools) {
    CHECK(st.reputation == 0.5);
    CHECK(st.leak_event);
  }
  for (std::size_t p = 0; p < res.rounds[1].pools.size(); ++p) {
    const PoolRoundStats& before = res.rounds[0].pools[p];
    const PoolRoundStats& after = res.rounds[1].pools[p];
    CHECK_THAT(after.reputation, WithinAbs(0.4, 1e-12));
    CHECK(after.quote.p < before.quote.p);  // the economic feedback
  }
}

TEST_CASE("cost sweep walks the real pipeline") {
  SplitPrg prg(601, "sim-cost");
  std::vector<CostRow> rows = run_cost_sweep({8, 16, 32}, 512, 1, prg);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].he_bytes > 0);
    CHECK(rows[i].gc_model_gates == comparator_cost_model(rows[i].pieces).total);
    if (i > 0) {
      // Doubling the rows exactly doubles HE and OT traffic.
      CHECK(rows[i].he_bytes == 2 * rows[i - 1].he_bytes);
      CHECK(rows[i].ot_bytes == 2 * rows[i - 1].ot_bytes);
      CHECK(rows[i].gc_bytes > rows[i - 1].gc_bytes);
    }
  }
}

TEST_CASE("file helpers roundtrip bytes") {
  std::string path = "test_sim_roundtrip.tmp";
  write_file(path, std::string("hello\nworld"));
  Bytes back = read_file(path);
  CHECK(std::string(back.begin(), back.end()) == "hello\nworld");
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_file("/nonexistent/file.bin"), InvalidArgument);
}
