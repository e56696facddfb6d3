#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include "isac/comm_metrics.hpp"
#include "isac/hybrid_factorization.hpp"
#include "isac/power.hpp"
#include "json.hpp"

namespace isac {
namespace {

using nlohmann::json;

std::string fmt_g(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string mask_to_bits(const SelectionMask& m) {
  std::string s;
  s.reserve(static_cast<std::size_t>(m.size()));
  for (int i = 0; i < m.size(); ++i) s.push_back(m[i] ? '1' : '0');
  return s;
}

std::uint64_t search_seed(std::uint64_t master, int trial) {
  SplitRng rng(master, stream::kSearch, static_cast<std::uint64_t>(trial));
  return rng.next_u64();
}

void fill_from_outcome(RunResult& r, const DesignOutcome& d) {
  r.feasible = d.feasible;
  r.rate_bits = d.rate_bits;
  r.power = d.power;
  r.ee = d.ee;
  r.mask_bits = mask_to_bits(d.mask);
  r.n_active = d.mask.count();
  r.effective = d.f;
  r.trace = d.trace;
}

void fill_from_search(RunResult& r, const SearchResult& s) {
  r.feasible = true;
  r.rate_bits = s.rate_bits;
  r.power = s.power;
  r.ee = s.ee;
  r.mask_bits = mask_to_bits(s.mask);
  r.n_active = s.mask.count();
  r.effective = s.f;
  r.mask_log = s.log;
}

/// Re-scores a subarray design exactly: factorize, then rate and PC power of
/// the factorized precoder.
void pc_rescore(RunResult& r, const SimConfig& cfg, const ChannelSet& h) {
  const FactorizationResult fr = pc_match(stack_precoders(r.effective), cfg.sys);
  r.effective = fr.precoder.effective_fd();
  r.residual = fr.residual;
  r.mask_bits = mask_to_bits(fr.precoder.mask);
  r.n_active = fr.precoder.mask.count();
  r.rate_bits =
      spectral_efficiency(h, r.effective, cfg.sys.n_streams, cfg.sys.noise_var);
  r.power = total_power_pc(fr.precoder, cfg.sys);
  r.ee = r.rate_bits / r.power;
}

void fc_rescore(RunResult& r, const SimConfig& cfg, const ChannelSet& h,
                int n_active) {
  const FactorizationResult fr =
      fc_match(stack_precoders(r.effective), n_active, cfg.sys);
  r.effective = fr.precoder.effective_fd();
  r.residual = fr.residual;
  r.rate_bits =
      spectral_efficiency(h, r.effective, cfg.sys.n_streams, cfg.sys.noise_var);
  r.power = total_power_fc(fr.precoder, cfg.sys);
  r.ee = r.rate_bits / r.power;
  r.mask_bits = mask_to_bits(fr.precoder.mask);
  r.n_active = fr.precoder.mask.count();
}

SearchResult dispatch_search(const SimConfig& cfg, const ChannelSet& h,
                             PowerModelKind kind, Method method,
                             std::uint64_t seed, int trial) {
  switch (method) {
    case Method::Greedy:
      return greedy_search(cfg, h, kind, search_seed(seed, trial));
    case Method::Brute:
      return brute_force_search(cfg, h, kind);
    case Method::Random:
      return random_selection(cfg, h, kind, search_seed(seed, trial));
    case Method::AllOn:
      return all_on_design(cfg, h, kind);
    case Method::Proposed:
      break;
  }
  throw std::logic_error("dispatch_search: not a search method");
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::Proposed: return "proposed";
    case Method::Greedy: return "greedy";
    case Method::Brute: return "brute";
    case Method::Random: return "random";
    case Method::AllOn: return "all-on";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "proposed") return Method::Proposed;
  if (name == "greedy") return Method::Greedy;
  if (name == "brute") return Method::Brute;
  if (name == "random") return Method::Random;
  if (name == "all-on" || name == "allon") return Method::AllOn;
  throw std::invalid_argument("unknown method: " + name);
}

Architecture parse_architecture(const std::string& name) {
  if (name == "fd") return Architecture::FD;
  if (name == "fc") return Architecture::FC;
  if (name == "pc") return Architecture::PC;
  throw std::invalid_argument("unknown architecture: " + name);
}

RunResult run_design(const SimConfig& cfg, Architecture arch, Method method,
                     const ChannelSet& h, std::uint64_t seed, int trial) {
  if (arch == Architecture::FC && method == Method::Brute) {
    throw std::invalid_argument(
        "brute force under FC is rejected: chains are interchangeable, use "
        "the proposed candidate sweep");
  }

  RunResult r;
  r.method = method;
  r.arch = arch;
  r.p_th = cfg.sys.p_th;
  r.trial = trial;
  r.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    switch (arch) {
      case Architecture::FD: {
        if (method == Method::Proposed) {
          fill_from_outcome(r, run_annealed_design(cfg, h, PowerModelKind::FD));
        } else {
          fill_from_search(
              r, dispatch_search(cfg, h, PowerModelKind::FD, method, seed, trial));
        }
        break;
      }
      case Architecture::PC: {
        if (method == Method::Proposed) {
          fill_from_outcome(r, run_annealed_design(cfg, h, PowerModelKind::PCEquivalent));
        } else {
          fill_from_search(r, dispatch_search(cfg, h, PowerModelKind::PCEquivalent,
                                              method, seed, trial));
        }
        if (r.feasible) pc_rescore(r, cfg, h);
        break;
      }
      case Architecture::FC: {
        if (method == Method::Proposed) {
          const FcSweepResult sweep = fc_candidate_sweep(cfg, h);
          r.feasible = true;
          r.rate_bits = sweep.rate_bits;
          r.power = sweep.power;
          r.ee = sweep.ee;
          r.residual = sweep.residual;
          r.mask_bits = mask_to_bits(sweep.precoder.mask);
          r.n_active = sweep.precoder.mask.count();
          r.effective = sweep.precoder.effective_fd();
          r.mask_log = sweep.log;
        } else {
          fill_from_search(r, dispatch_search(cfg, h, PowerModelKind::FCEquivalent,
                                              method, seed, trial));
          if (r.feasible) fc_rescore(r, cfg, h, r.n_active);
        }
        break;
      }
    }
  } catch (const InfeasibleError&) {
    r.feasible = false;
  }
  r.runtime_s = std::chrono::duration<Real>(std::chrono::steady_clock::now() -
                                            start)
                    .count();
  return r;
}

void write_run_json(const RunResult& r, const std::string& path) {
  json j{
      {"schema_version", kResultSchemaVersion},
      {"method", to_string(r.method)},
      {"arch", to_string(r.arch)},
      {"p_th", r.p_th},
      {"trial", r.trial},
      {"seed", r.seed},
      {"feasible", r.feasible},
      {"rate_bits", r.rate_bits},
      {"power_w", r.power},
      {"ee", r.ee},
      {"mask", r.mask_bits},
      {"n_active", r.n_active},
      {"residual", r.residual},
      {"runtime_s", r.runtime_s},
  };
  if (r.p_d.has_value()) j["p_d"] = *r.p_d;
  if (r.fa_rate.has_value()) j["fa_rate"] = *r.fa_rate;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << '\n';
}

void write_trace_jsonl(const OptimizerTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const TraceRecord& t : trace.records) {
    json j{
        {"outer", t.outer},
        {"inner", t.inner},
        {"lambda", t.lambda},
        {"mu", t.mu},
        {"surrogate_obj", t.surrogate_obj},
        {"rate_bits", t.rate_bits},
        {"power_exact", t.power_exact},
        {"power_relaxed", t.power_relaxed},
        {"ee", t.ee},
        {"min_group_norm", t.min_group_norm},
        {"max_group_norm", t.max_group_norm},
        {"beam_slack", t.beam_slack},
        {"power_slack", t.power_slack},
    };
    out << j.dump() << '\n';
  }
}

MeanCi mean_ci(const std::vector<Real>& values) {
  MeanCi m;
  m.n = static_cast<int>(values.size());
  if (m.n == 0) return m;
  Real sum = 0;
  for (Real v : values) sum += v;
  m.mean = sum / m.n;
  if (m.n < 2) return m;
  Real sq = 0;
  for (Real v : values) sq += (v - m.mean) * (v - m.mean);
  const Real sd = std::sqrt(sq / (m.n - 1));
  m.ci = 1.96 * sd / std::sqrt(static_cast<Real>(m.n));
  return m;
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  int workers = n_threads > 0
                    ? n_threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

namespace {

struct AggRow {
  Real p_th = 0;
  std::string method;
  int n_trials = 0;
  int n_feasible = 0;
  MeanCi ee, rate, power, active, p_d;
  bool has_p_d = false;
};

AggRow summarize(Real p_th, const std::string& method,
                 const std::vector<const RunResult*>& runs) {
  AggRow row;
  row.p_th = p_th;
  row.method = method;
  row.n_trials = static_cast<int>(runs.size());
  std::vector<Real> ee, rate, power, active, pd;
  for (const RunResult* r : runs) {
    if (!r->feasible) continue;
    ++row.n_feasible;
    ee.push_back(r->ee);
    rate.push_back(r->rate_bits);
    power.push_back(r->power);
    active.push_back(static_cast<Real>(r->n_active));
    if (r->p_d.has_value()) pd.push_back(*r->p_d);
  }
  row.ee = mean_ci(ee);
  row.rate = mean_ci(rate);
  row.power = mean_ci(power);
  row.active = mean_ci(active);
  row.p_d = mean_ci(pd);
  row.has_p_d = !pd.empty();
  return row;
}

void write_rows_csv(const std::vector<AggRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "schema_version,p_th,method,n_trials,n_feasible,mean_ee,ci_ee,"
         "mean_rate_bits,ci_rate_bits,mean_power_w,ci_power_w,"
         "mean_active,ci_active,mean_pd,ci_pd\n";
  for (const AggRow& r : rows) {
    out << kResultSchemaVersion << ',' << fmt_g(r.p_th) << ',' << r.method
        << ',' << r.n_trials << ',' << r.n_feasible << ',' << fmt_g(r.ee.mean)
        << ',' << fmt_g(r.ee.ci) << ',' << fmt_g(r.rate.mean) << ','
        << fmt_g(r.rate.ci) << ',' << fmt_g(r.power.mean) << ','
        << fmt_g(r.power.ci) << ',' << fmt_g(r.active.mean) << ','
        << fmt_g(r.active.ci) << ',';
    if (r.has_p_d) {
      out << fmt_g(r.p_d.mean) << ',' << fmt_g(r.p_d.ci);
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace

std::vector<SweepCell> run_sweep(const SimConfig& base, Architecture arch,
                                 const SweepOptions& opt) {
  if (opt.pth_grid.empty() || opt.methods.empty() || opt.trials < 1) {
    throw std::invalid_argument("run_sweep: empty grid, methods, or trials");
  }

  std::vector<ChannelSet> channels;
  channels.reserve(static_cast<std::size_t>(opt.trials));
  for (int t = 0; t < opt.trials; ++t) {
    channels.push_back(generate_channel(base.sys, base.channel, opt.seed,
                                        static_cast<std::uint64_t>(t)));
  }

  const int n_points = static_cast<int>(opt.pth_grid.size());
  const int n_methods = static_cast<int>(opt.methods.size());
  const int total = n_points * n_methods * opt.trials;

  std::vector<SweepCell> cells(static_cast<std::size_t>(n_points * n_methods));
  for (int pi = 0; pi < n_points; ++pi) {
    for (int mi = 0; mi < n_methods; ++mi) {
      SweepCell& c = cells[static_cast<std::size_t>(pi * n_methods + mi)];
      c.p_th = opt.pth_grid[static_cast<std::size_t>(pi)];
      c.method = opt.methods[static_cast<std::size_t>(mi)];
      c.runs.resize(static_cast<std::size_t>(opt.trials));
    }
  }

  parallel_for(total, opt.n_threads, [&](int idx) {
    const int t = idx % opt.trials;
    const int mi = (idx / opt.trials) % n_methods;
    const int pi = idx / (opt.trials * n_methods);
    SimConfig cfg = base;
    cfg.sys.p_th = opt.pth_grid[static_cast<std::size_t>(pi)];
    RunResult r = run_design(cfg, arch, opt.methods[static_cast<std::size_t>(mi)],
                             channels[static_cast<std::size_t>(t)], opt.seed, t);
    if (r.feasible && opt.sense_trials > 0) {
      const SenseSummary s =
          sense_monte_carlo(cfg, r.effective, opt.seed, opt.sense_trials);
      if (s.p_d_defined) r.p_d = s.p_d;
      r.fa_rate = s.fa_rate;
    }
    cells[static_cast<std::size_t>(pi * n_methods + mi)]
        .runs[static_cast<std::size_t>(t)] = std::move(r);
  });

  if (!opt.out_dir.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    if (opt.write_runs) {
      for (int pi = 0; pi < n_points; ++pi) {
        for (int mi = 0; mi < n_methods; ++mi) {
          const SweepCell& c = cells[static_cast<std::size_t>(pi * n_methods + mi)];
          for (int t = 0; t < opt.trials; ++t) {
            char name[96];
            std::snprintf(name, sizeof(name), "run_%s_p%02d_t%04d.json",
                          to_string(c.method), pi, t);
            write_run_json(c.runs[static_cast<std::size_t>(t)],
                           opt.out_dir + "/" + name);
          }
        }
      }
    }
    write_aggregate_csv(cells, opt.out_dir + "/aggregate.csv");
  }
  return cells;
}

void write_aggregate_csv(const std::vector<SweepCell>& cells,
                         const std::string& path) {
  // Canonical row order (ascending p_th, then method name) so a re-aggregation
  // of the written run files reproduces this file byte for byte.
  std::vector<const SweepCell*> ordered;
  ordered.reserve(cells.size());
  for (const SweepCell& c : cells) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const SweepCell* a, const SweepCell* b) {
              if (a->p_th != b->p_th) return a->p_th < b->p_th;
              return std::string(to_string(a->method)) < to_string(b->method);
            });
  std::vector<AggRow> rows;
  rows.reserve(ordered.size());
  for (const SweepCell* c : ordered) {
    std::vector<const RunResult*> ptrs;
    ptrs.reserve(c->runs.size());
    for (const RunResult& r : c->runs) ptrs.push_back(&r);
    rows.push_back(summarize(c->p_th, to_string(c->method), ptrs));
  }
  write_rows_csv(rows, path);
}

void aggregate_directory(const std::string& dir, const std::string& out_csv) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("run_", 0) == 0 &&
        e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  if (files.empty()) {
    throw std::runtime_error("aggregate: no run_*.json files in " + dir);
  }
  std::sort(files.begin(), files.end());

  int schema = -1;
  std::vector<RunResult> runs;
  runs.reserve(files.size());
  for (const fs::path& p : files) {
    std::ifstream in(p);
    json j = json::parse(in);
    const int s = j.at("schema_version").get<int>();
    if (schema == -1) schema = s;
    if (s != schema) {
      throw std::runtime_error("aggregate: mixed schema versions in " + dir);
    }
    RunResult r;
    r.method = parse_method(j.at("method").get<std::string>());
    r.p_th = j.at("p_th").get<Real>();
    r.feasible = j.at("feasible").get<bool>();
    r.rate_bits = j.at("rate_bits").get<Real>();
    r.power = j.at("power_w").get<Real>();
    r.ee = j.at("ee").get<Real>();
    r.n_active = j.at("n_active").get<int>();
    if (j.contains("p_d")) r.p_d = j.at("p_d").get<Real>();
    runs.push_back(std::move(r));
  }

  // Group by (p_th, method) in sorted order.
  std::map<std::pair<Real, std::string>, std::vector<const RunResult*>> groups;
  for (const RunResult& r : runs) {
    groups[{r.p_th, to_string(r.method)}].push_back(&r);
  }
  std::vector<AggRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, ptrs] : groups) {
    rows.push_back(summarize(key.first, key.second, ptrs));
  }
  write_rows_csv(rows, out_csv);
}

std::vector<TradeoffPoint> run_tradeoff_grid(const SimConfig& cfg,
                                             const ChannelSet& h,
                                             const std::vector<Real>& omega1_grid,
                                             PowerModelKind kind) {
  std::vector<TradeoffPoint> points;
  points.reserve(omega1_grid.size());
  for (Real w : omega1_grid) {
    points.push_back(run_tradeoff_point(cfg, h, w, 1.0 - w, kind));
  }
  return points;
}

void write_frontier_csv(const std::vector<TradeoffPoint>& points,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "schema_version,omega1,omega2,feasible,rate_bits,power_w,ee,n_active\n";
  for (const TradeoffPoint& p : points) {
    out << kResultSchemaVersion << ',' << fmt_g(p.omega1) << ','
        << fmt_g(p.omega2) << ',' << (p.feasible ? 1 : 0) << ','
        << fmt_g(p.rate_bits) << ',' << fmt_g(p.power) << ',' << fmt_g(p.ee)
        << ',' << p.mask.count() << '\n';
  }
}

}  // namespace isac
