// Command-line driver for the precoder designs, the sensing pipeline, and the
// Monte-Carlo experiment harness. See README.md for usage examples.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isac/channel.hpp"
#include "isac/harness.hpp"
#include "isac/hybrid_factorization.hpp"
#include "isac/radar.hpp"
#include "json.hpp"

namespace {

using namespace isac;

struct CommonArgs {
  std::string config_path;
  std::string preset = "setup1";
  std::string arch = "fd";
  std::string out_dir = "results";
  std::uint64_t seed = 1;
  int n_rf_override = -1;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_arch = true) {
  cmd->add_option("--config", a.config_path, "JSON config file (overrides --preset)");
  cmd->add_option("--preset", a.preset, "Built-in parameter set")
      ->check(CLI::IsMember({"setup1", "setup2"}));
  if (with_arch) {
    cmd->add_option("--arch", a.arch, "Transmitter architecture")
        ->check(CLI::IsMember({"fd", "fc", "pc"}));
    cmd->add_option("--nrf", a.n_rf_override, "Override the RF chain count");
  }
  cmd->add_option("--seed", a.seed, "Master seed for all RNG streams");
  cmd->add_option("--out", a.out_dir, "Output directory");
}

SimConfig load_common(const CommonArgs& a, bool with_arch = true) {
  SimConfig cfg = a.config_path.empty() ? preset_config(a.preset)
                                        : load_config(a.config_path);
  if (with_arch) {
    apply_architecture(cfg, parse_architecture(a.arch), a.n_rf_override,
                       a.config_path.empty() ? a.preset : "");
  }
  cfg.validate();
  return cfg;
}

void snapshot_config(const SimConfig& cfg, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  save_config(cfg, out_dir + "/config.json");
}

int cmd_optimize(const CommonArgs& a, const std::string& method_name, int trials,
                 double pth_override) {
  SimConfig cfg = load_common(a);
  if (pth_override >= 0) cfg.sys.p_th = pth_override;
  const Architecture arch = parse_architecture(a.arch);
  const Method method = parse_method(method_name);
  snapshot_config(cfg, a.out_dir);

  int n_feasible = 0;
  for (int t = 0; t < trials; ++t) {
    const ChannelSet h = generate_channel(cfg.sys, cfg.channel, a.seed,
                                          static_cast<std::uint64_t>(t));
    const RunResult r = run_design(cfg, arch, method, h, a.seed, t);
    char name[96];
    std::snprintf(name, sizeof(name), "run_%s_t%04d.json", to_string(method), t);
    write_run_json(r, a.out_dir + "/" + name);
    if (method == Method::Proposed && !r.trace.records.empty()) {
      std::snprintf(name, sizeof(name), "trace_t%04d.jsonl", t);
      write_trace_jsonl(r.trace, a.out_dir + "/" + name);
    }
    if (!r.mask_log.empty()) {
      std::snprintf(name, sizeof(name), "masklog_%s_t%04d.csv",
                    to_string(method), t);
      write_mask_log_csv(r.mask_log, a.out_dir + "/" + name);
    }
    if (r.feasible) {
      ++n_feasible;
      std::printf(
          "trial %d: ee=%.6g bit/Hz/J  rate=%.6g bit/s/Hz  power=%.6g W  "
          "active=%d/%s  (%.2fs)\n",
          t, r.ee, r.rate_bits, r.power, r.n_active, r.mask_bits.c_str(),
          r.runtime_s);
    } else {
      std::printf("trial %d: infeasible under P_th=%g W\n", t, cfg.sys.p_th);
    }
  }
  return n_feasible > 0 ? 0 : 2;
}

int cmd_sense(const CommonArgs& a, const std::string& method_name, int trials,
              bool export_maps) {
  SimConfig cfg = load_common(a);
  const Architecture arch = parse_architecture(a.arch);
  const Method method = parse_method(method_name);
  snapshot_config(cfg, a.out_dir);

  const ChannelSet h = generate_channel(cfg.sys, cfg.channel, a.seed, 0);
  const RunResult design = run_design(cfg, arch, method, h, a.seed, 0);
  if (!design.feasible) {
    std::fprintf(stderr, "sense: design infeasible under P_th=%g W\n",
                 cfg.sys.p_th);
    return 2;
  }

  const SenseSummary s =
      sense_monte_carlo(cfg, design.effective, a.seed, trials);
  nlohmann::json j{
      {"schema_version", kResultSchemaVersion},
      {"trials", s.n_trials},
      {"fa_rate", s.fa_rate},
      {"n_noise_cells", s.n_noise_cells},
      {"n_false_alarms", s.n_false_alarms},
      {"p_fa_target", cfg.sys.p_fa},
      {"design_ee", design.ee},
      {"design_mask", design.mask_bits},
  };
  if (s.p_d_defined) j["p_d"] = s.p_d;
  std::ofstream out(a.out_dir + "/sense.json");
  out << j.dump(2) << '\n';

  if (export_maps) {
    SplitRng sym_rng(a.seed, stream::kSymbol, 0);
    SplitRng noise_rng(a.seed, stream::kNoise, 0);
    const SymbolGrid symbols = draw_symbols(cfg.sys, sym_rng);
    const ReceivedGrid rx = synthesize_rx(cfg.sys, design.effective, symbols,
                                          cfg.scene, noise_rng);
    const std::vector<Real> angles = cfg.grid.angles();
    std::vector<int> indices;
    for (const Target& t : cfg.scene)
      indices.push_back(cfg.grid.nearest_index(t.angle_rad));
    if (indices.empty()) indices.push_back(0);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const RDMap map =
          make_rd_map(cfg.sys, rx, design.effective, symbols,
                      angles[static_cast<std::size_t>(indices[i])]);
      char name[64];
      std::snprintf(name, sizeof(name), "rdmap_%02zu", i);
      export_rd_map(map, a.out_dir + "/" + name);
    }
  }

  if (s.p_d_defined) {
    std::printf("P_D=%.4f  FA=%.3e (target %.1e)  cells=%ld\n", s.p_d,
                s.fa_rate, cfg.sys.p_fa, s.n_noise_cells);
  } else {
    std::printf("FA=%.3e (target %.1e)  cells=%ld\n", s.fa_rate, cfg.sys.p_fa,
                s.n_noise_cells);
  }
  return 0;
}

int cmd_tradeoff(const CommonArgs& a, const std::vector<double>& omega_grid) {
  SimConfig cfg = load_common(a);
  const Architecture arch = parse_architecture(a.arch);
  if (arch == Architecture::FC) {
    std::fprintf(stderr, "tradeoff: FC has no per-chain scalarized variant; "
                         "use fd or pc\n");
    return 1;
  }
  const PowerModelKind kind = arch == Architecture::PC
                                  ? PowerModelKind::PCEquivalent
                                  : PowerModelKind::FD;
  snapshot_config(cfg, a.out_dir);
  const ChannelSet h = generate_channel(cfg.sys, cfg.channel, a.seed, 0);
  const auto points = run_tradeoff_grid(cfg, h, omega_grid, kind);
  write_frontier_csv(points, a.out_dir + "/frontier.csv");
  int n_feasible = 0;
  for (const auto& p : points) {
    n_feasible += p.feasible;
    std::printf("omega1=%.3f: %s rate=%.6g power=%.6g\n", p.omega1,
                p.feasible ? "ok" : "infeasible", p.rate_bits, p.power);
  }
  return n_feasible > 0 ? 0 : 2;
}

int cmd_sweep(const CommonArgs& a, const std::vector<std::string>& methods,
              const std::vector<double>& pth_grid, int trials, int sense_trials,
              int threads) {
  SimConfig cfg = load_common(a);
  const Architecture arch = parse_architecture(a.arch);
  SweepOptions opt;
  for (const auto& m : methods) opt.methods.push_back(parse_method(m));
  opt.pth_grid.assign(pth_grid.begin(), pth_grid.end());
  if (opt.pth_grid.empty()) opt.pth_grid.push_back(cfg.sys.p_th);
  opt.trials = trials;
  opt.sense_trials = sense_trials;
  opt.seed = a.seed;
  opt.out_dir = a.out_dir;
  opt.n_threads = threads;
  snapshot_config(cfg, a.out_dir);

  const auto cells = run_sweep(cfg, arch, opt);
  long n_feasible = 0;
  for (const auto& c : cells) {
    long cell_feasible = 0;
    for (const auto& r : c.runs) cell_feasible += r.feasible;
    n_feasible += cell_feasible;
    std::printf("p_th=%-8g %-9s feasible %ld/%zu\n", c.p_th,
                to_string(c.method), cell_feasible, c.runs.size());
  }
  std::printf("aggregate written to %s/aggregate.csv\n", a.out_dir.c_str());
  return n_feasible > 0 ? 0 : 2;
}

int cmd_calibrate(const CommonArgs& a, int trials) {
  SimConfig cfg = load_common(a);
  const Architecture arch = parse_architecture(a.arch);
  snapshot_config(cfg, a.out_dir);

  const ChannelSet h = generate_channel(cfg.sys, cfg.channel, a.seed, 0);
  const RunResult design = run_design(cfg, arch, Method::Proposed, h, a.seed, 0);
  if (!design.feasible) {
    std::fprintf(stderr, "calibrate-cfar: design infeasible\n");
    return 2;
  }

  SimConfig empty_scene = cfg;
  empty_scene.scene.clear();
  const SenseSummary s =
      sense_monte_carlo(empty_scene, design.effective, a.seed, trials);

  const Real p = cfg.sys.p_fa;
  const Real sigma =
      std::sqrt(p * (1 - p) / static_cast<Real>(s.n_noise_cells));
  const Real z = (s.fa_rate - p) / sigma;
  nlohmann::json j{
      {"schema_version", kResultSchemaVersion},
      {"trials", trials},
      {"p_fa_target", p},
      {"fa_rate", s.fa_rate},
      {"n_cells", s.n_noise_cells},
      {"n_false_alarms", s.n_false_alarms},
      {"z_score", z},
      {"within_3_sigma", std::abs(z) <= 3.0},
  };
  std::ofstream out(a.out_dir + "/calibrate.json");
  out << j.dump(2) << '\n';
  std::printf("FA=%.5e target=%.1e z=%+.2f cells=%ld -> %s\n", s.fa_rate, p, z,
              s.n_noise_cells, std::abs(z) <= 3.0 ? "within 3 sigma" : "OUTSIDE");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficient MU-MIMO-OFDM ISAC transmitter simulator"};
  app.require_subcommand(1);

  CommonArgs opt_args, sense_args, trade_args, sweep_args, cal_args;
  std::string opt_method = "proposed", sense_method = "proposed";
  int opt_trials = 1, sense_trials = 100, sweep_trials = 10, sweep_sense = 0;
  int sweep_threads = 0, cal_trials = 500;
  double opt_pth = -1;
  bool export_maps = false;
  std::vector<double> omega_grid{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> pth_grid;
  std::vector<std::string> sweep_methods{"proposed"};
  std::string agg_dir, agg_out;

  CLI::App* optimize = app.add_subcommand("optimize", "Design one precoder per channel draw");
  add_common(optimize, opt_args);
  optimize->add_option("--method", opt_method, "Selection strategy")
      ->check(CLI::IsMember({"proposed", "greedy", "brute", "random", "all-on"}));
  optimize->add_option("--trials", opt_trials, "Independent channel draws");
  optimize->add_option("--pth", opt_pth, "Override the beam power floor (W)");

  CLI::App* sense = app.add_subcommand("sense", "Design, then run the radar pipeline");
  add_common(sense, sense_args);
  sense->add_option("--method", sense_method, "Selection strategy")
      ->check(CLI::IsMember({"proposed", "greedy", "brute", "random", "all-on"}));
  sense->add_option("--trials", sense_trials, "Sensing Monte-Carlo trials");
  sense->add_flag("--export-maps", export_maps, "Write RD maps near each target");

  CLI::App* tradeoff = app.add_subcommand("tradeoff", "Rate/power scalarized frontier");
  add_common(tradeoff, trade_args);
  tradeoff->add_option("--omega-grid", omega_grid, "Rate weights in [0,1]")
      ->delimiter(',');

  CLI::App* sweep = app.add_subcommand("sweep", "P_th sweep with Monte-Carlo trials");
  add_common(sweep, sweep_args);
  sweep->add_option("--methods", sweep_methods, "Comma-separated strategies")
      ->delimiter(',');
  sweep->add_option("--pth-grid", pth_grid, "Beam power floors (W)")->delimiter(',');
  sweep->add_option("--trials", sweep_trials, "Channel draws per sweep point");
  sweep->add_option("--sense-trials", sweep_sense,
                    "Sensing trials per design (0 = skip sensing)");
  sweep->add_option("--threads", sweep_threads, "Worker threads (0 = auto)");

  CLI::App* calibrate = app.add_subcommand("calibrate-cfar",
                                           "Empty-scene false-alarm calibration");
  add_common(calibrate, cal_args);
  calibrate->add_option("--trials", cal_trials, "Noise-only frames");

  CLI::App* aggregate = app.add_subcommand("aggregate", "Summarize run_*.json files");
  aggregate->add_option("dir", agg_dir, "Results directory")->required();
  aggregate->add_option("--out", agg_out, "Output CSV (default <dir>/summary.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (optimize->parsed())
      return cmd_optimize(opt_args, opt_method, opt_trials, opt_pth);
    if (sense->parsed())
      return cmd_sense(sense_args, sense_method, sense_trials, export_maps);
    if (tradeoff->parsed()) return cmd_tradeoff(trade_args, omega_grid);
    if (sweep->parsed())
      return cmd_sweep(sweep_args, sweep_methods, pth_grid, sweep_trials,
                       sweep_sense, sweep_threads);
    if (calibrate->parsed()) return cmd_calibrate(cal_args, cal_trials);
    if (aggregate->parsed()) {
      aggregate_directory(agg_dir,
                          agg_out.empty() ? agg_dir + "/summary.csv" : agg_out);
      return 0;
    }
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
