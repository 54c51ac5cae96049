// Command-line front end: run full consensus simulations, sweep trading or
// verification-cost axes, check chain dumps, and print round reports.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "pofl/sim.hpp"

namespace fs = std::filesystem;
using namespace pofl;

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::size_t at = 0;
  while (at <= csv.size()) {
    std::size_t comma = csv.find(',', at);
    std::string tok = csv.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
    if (tok.empty()) throw InvalidArgument("values: empty entry in list");
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw InvalidArgument("values: bad number '" + tok + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  if (out.empty()) throw InvalidArgument("values: empty list");
  return out;
}

SimConfig load_config(const std::string& path) {
  if (path.empty()) return SimConfig{};
  return SimConfig::from_toml(TomlTable::parse_file(path));
}

int cmd_run(const std::string& cfg_path, std::int64_t seed, const std::string& out_dir,
            std::string& stage) {
  stage = "config";
  SimConfig cfg = load_config(cfg_path);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);

  stage = "run";
  SimResult res = run_simulation(cfg);

  stage = "io";
  fs::create_directories(fs::path(out_dir) / "reports");
  write_file((fs::path(out_dir) / "chain.bin").string(), res.chain.serialize());
  write_file((fs::path(out_dir) / "rounds.csv").string(), rounds_csv(res));
  write_file((fs::path(out_dir) / "convergence.csv").string(),
             convergence_csv(res.rounds.back().winner_curve));
  for (const RoundReport& r : res.rounds)
    write_file((fs::path(out_dir) / "reports" / ("round_" + std::to_string(r.round) + ".json"))
                   .string(),
               round_report_json(r).dump(2) + "\n");

  for (const RoundReport& r : res.rounds)
    std::cout << "round " << r.round << ": winner=" << r.winner << " accuracy="
              << r.winner_accuracy << " block=" << r.block_hash.substr(0, 16) << "\n";
  std::cout << "wrote chain.bin, rounds.csv, convergence.csv and " << res.rounds.size()
            << " reports under " << out_dir << "\n";
  return 0;
}

int cmd_sweep(const std::string& cfg_path, const std::string& axis, const std::string& values_csv,
              std::int64_t seed, unsigned key_bits, int label_bits, const std::string& out_dir,
              std::string& stage) {
  stage = "config";
  SimConfig cfg = load_config(cfg_path);
  std::vector<double> values = parse_values(values_csv);

  stage = "sweep";
  fs::create_directories(out_dir);
  if (axis == "pieces") {
    std::vector<std::uint64_t> pieces;
    for (double v : values) {
      if (v < 1 || v != static_cast<double>(static_cast<std::uint64_t>(v)))
        throw InvalidArgument("sweep: pieces values must be positive integers");
      pieces.push_back(static_cast<std::uint64_t>(v));
    }
    SplitPrg prg(seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seed, "cost-sweep");
    std::vector<CostRow> rows = run_cost_sweep(pieces, key_bits, label_bits, prg);
    stage = "io";
    std::string path = (fs::path(out_dir) / "cost.csv").string();
    write_file(path, cost_csv(rows));
    std::cout << "wrote " << rows.size() << " cost rows to " << path << "\n";
  } else {
    std::vector<SweepRow> rows = run_sweep(cfg.trading, axis, values);
    stage = "io";
    std::string path = (fs::path(out_dir) / ("sweep_" + axis + ".csv")).string();
    write_file(path, sweep_csv(rows));
    std::cout << "wrote " << rows.size() << " rows to " << path << "\n";
  }
  return 0;
}

int cmd_verify_chain(const std::string& file, std::string& stage) {
  stage = "io";
  Bytes raw = read_file(file);
  stage = "verify";
  Chain chain = Chain::deserialize(raw);
  chain.verify();
  ReputationLedger led = chain.replay_reputation();
  std::cout << "chain ok: " << chain.blocks().size() << " blocks, tip "
            << digest_hex(chain.tip_hash()).substr(0, 16) << "\n";
  for (const auto& [pool, rep] : led.table())
    std::cout << "  reputation " << pool << " = " << fmt_double(rep) << "\n";
  return 0;
}

int cmd_report(const std::string& cfg_path, std::int64_t seed, std::int64_t round,
               std::string& stage) {
  stage = "config";
  SimConfig cfg = load_config(cfg_path);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (round < 0 || round >= cfg.rounds)
    throw InvalidArgument("report: round " + std::to_string(round) + " outside configured range");

  stage = "run";
  SimResult res = run_simulation(cfg);
  std::cout << round_report_json(res.rounds[static_cast<std::size_t>(round)]).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proof-of-federated-learning consensus simulator"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir = "out", axis, values_csv, chain_file;
  std::int64_t seed = -1, round = 0;
  unsigned key_bits = 512;
  int label_bits = 1;

  CLI::App* run = app.add_subcommand("run", "simulate consensus rounds and write artifacts");
  run->add_option("--config", cfg_path, "TOML config file (defaults apply if omitted)");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "equilibrium sweep over one axis, or 'pieces' "
                                                "for verification cost");
  sweep->add_option("--axis", axis, "r|q|eps1|eps2|eta|m_bar|ds_bar|alpha|alpha_t|beta|beta_t|"
                                    "pieces")
      ->required();
  sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
  sweep->add_option("--config", cfg_path, "TOML config for the base parameters");
  sweep->add_option("--seed", seed, "seed for the cost sweep");
  sweep->add_option("--key-bits", key_bits, "HE modulus bits for the cost sweep");
  sweep->add_option("--label-bits", label_bits, "label width for the cost sweep");
  sweep->add_option("--out", out_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify-chain", "structurally validate a chain dump");
  verify->add_option("--file", chain_file, "chain.bin path")->required();

  CLI::App* report = app.add_subcommand("report", "print one round's JSON report");
  report->add_option("--round", round, "round index")->required();
  report->add_option("--config", cfg_path, "TOML config file");
  report->add_option("--seed", seed, "override the config seed");

  CLI11_PARSE(app, argc, argv);

  std::string stage = "startup";
  try {
    if (run->parsed()) return cmd_run(cfg_path, seed, out_dir, stage);
    if (sweep->parsed())
      return cmd_sweep(cfg_path, axis, values_csv, seed, key_bits, label_bits, out_dir, stage);
    if (verify->parsed()) return cmd_verify_chain(chain_file, stage);
    if (report->parsed()) return cmd_report(cfg_path, seed, round, stage);
  } catch (const std::exception& e) {
    std::cerr << "error[" << stage << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
