#ifndef ISAC_HARNESS_HPP
#define ISAC_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/fd_optimizer.hpp"
#include "isac/radar.hpp"
#include "isac/selection_search.hpp"
#include "isac/types.hpp"

namespace isac {

inline constexpr int kResultSchemaVersion = 1;

enum class Method { Proposed, Greedy, Brute, Random, AllOn };

const char* to_string(Method m);
Method parse_method(const std::string& name);
Architecture parse_architecture(const std::string& name);

/// Outcome of one design run (one channel draw, one method, one setting).
struct RunResult {
  Method method = Method::Proposed;
  Architecture arch = Architecture::FD;
  Real p_th = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool feasible = false;
  Real rate_bits = 0;
  Real power = 0;
  Real ee = 0;
  std::string mask_bits;
  int n_active = 0;
  Real residual = 0;  // factorization mismatch, hybrid architectures only
  Real runtime_s = 0;
  std::optional<Real> p_d;      // filled when the sweep also senses
  std::optional<Real> fa_rate;

  // Carried in memory for downstream sensing/inspection, not serialized.
  PrecoderSet effective;
  OptimizerTrace trace;
  std::vector<MaskEval> mask_log;
};

/// Designs a transmit precoder on the given channel with the requested
/// architecture/method pair. Infeasible designs come back flagged rather than
/// thrown so sweeps can keep going; combinations that make no sense (brute
/// force under FC) throw std::invalid_argument.
RunResult run_design(const SimConfig& cfg, Architecture arch, Method method,
                     const ChannelSet& h, std::uint64_t seed, int trial);

void write_run_json(const RunResult& r, const std::string& path);
void write_trace_jsonl(const OptimizerTrace& trace, const std::string& path);

/// Mean and half-width of a normal 95% confidence interval.
struct MeanCi {
  Real mean = 0;
  Real ci = 0;
  int n = 0;
};
MeanCi mean_ci(const std::vector<Real>& values);

struct SweepOptions {
  std::vector<Real> pth_grid;
  std::vector<Method> methods;
  int trials = 1;
  int sense_trials = 0;  // 0 disables per-design sensing
  std::uint64_t seed = 1;
  std::string out_dir;
  int n_threads = 0;     // 0 = hardware concurrency
  bool write_runs = true;
};

struct SweepCell {
  Real p_th = 0;
  Method method = Method::Proposed;
  std::vector<RunResult> runs;
};

/// Runs the (P_th x method x trial) grid against shared per-trial channel
/// draws, optionally sensing with each feasible design, and writes per-run
/// JSON plus aggregate.csv under out_dir. Returns the grid of results.
std::vector<SweepCell> run_sweep(const SimConfig& base, Architecture arch,
                                 const SweepOptions& opt);

/// Aggregates sweep cells into the CSV emitted by run_sweep.
void write_aggregate_csv(const std::vector<SweepCell>& cells,
                         const std::string& path);

/// Re-aggregates a directory of run_*.json files (schema-checked) into a
/// summary CSV with the same layout as write_aggregate_csv.
void aggregate_directory(const std::string& dir, const std::string& out_csv);

/// Scalarized rate/power frontier over a grid of omega weights.
std::vector<TradeoffPoint> run_tradeoff_grid(const SimConfig& cfg,
                                             const ChannelSet& h,
                                             const std::vector<Real>& omega1_grid,
                                             PowerModelKind kind);
void write_frontier_csv(const std::vector<TradeoffPoint>& points,
                        const std::string& path);

/// Simple blocking worker pool over [0, n).
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

}  // namespace isac

#endif  // ISAC_HARNESS_HPP
