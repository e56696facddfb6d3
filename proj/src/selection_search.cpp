#include "isac/selection_search.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "isac/comm_metrics.hpp"
#include "isac/power.hpp"
#include "isac/rng.hpp"

namespace isac {
namespace {

constexpr Real kTieMargin = 1e-9;

/// FD selects per antenna; the hybrid power models select per RF chain.
int chain_count(const SystemConfig& s, PowerModelKind kind) {
  return kind == PowerModelKind::FD ? s.n_tx : s.n_rf;
}

SelectionMask mask_from_bits(std::uint32_t bits, int n) {
  SelectionMask m(n, false);
  for (int i = 0; i < n; ++i) {
    if (bits & (1u << i)) m.set(i, true);
  }
  return m;
}

SearchResult from_outcome(const DesignOutcome& d) {
  SearchResult r;
  r.mask = d.mask;
  r.f = d.f;
  r.rate_bits = d.rate_bits;
  r.power = d.power;
  r.ee = d.ee;
  return r;
}

void shuffle_in_place(std::vector<int>& v, SplitRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

SearchResult brute_force_search(const SimConfig& cfg, const ChannelSet& h,
                                PowerModelKind kind) {
  const int n = chain_count(cfg.sys, kind);
  if (n > 16) {
    throw std::invalid_argument("brute_force_search: more than 16 chains");
  }
  SearchResult result;
  bool found = false;
  DesignOutcome best;
  for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
    const SelectionMask mask = mask_from_bits(bits, n);
    const DesignOutcome d = design_precoder_given_selection(cfg, h, mask, kind);
    result.log.push_back({mask, d.feasible, d.ee});
    ++result.n_evaluations;
    if (!d.feasible) continue;
    bool take = !found;
    if (found) {
      const Real rel =
          (d.ee - best.ee) / std::max<Real>(std::abs(best.ee), 1e-30);
      if (rel > kTieMargin) {
        take = true;
      } else if (rel >= -kTieMargin) {
        take = mask.count() < best.mask.count() ||
               (mask.count() == best.mask.count() &&
                mask.active < best.mask.active);
      }
    }
    if (take) {
      best = d;
      found = true;
    }
  }
  if (!found) throw InfeasibleError("every selection is infeasible");
  auto log = std::move(result.log);
  const int evals = result.n_evaluations;
  result = from_outcome(best);
  result.log = std::move(log);
  result.n_evaluations = evals;
  return result;
}

SearchResult greedy_search(const SimConfig& cfg, const ChannelSet& h,
                           PowerModelKind kind, std::uint64_t seed) {
  const int n = chain_count(cfg.sys, kind);
  SearchResult result;
  DesignOutcome incumbent =
      design_precoder_given_selection(cfg, h, SelectionMask(n, true), kind);
  result.log.push_back({incumbent.mask, incumbent.feasible, incumbent.ee});
  ++result.n_evaluations;
  if (!incumbent.feasible) {
    throw InfeasibleError("greedy_search: all-on design infeasible");
  }

  SplitRng rng(seed, stream::kSearch);
  while (incumbent.mask.count() > 1) {
    std::vector<int> order = incumbent.mask.active_indices();
    shuffle_in_place(order, rng);
    bool accepted = false;
    for (int chain : order) {
      SelectionMask trial = incumbent.mask;
      trial.set(chain, false);
      const DesignOutcome d = design_precoder_given_selection(cfg, h, trial, kind);
      result.log.push_back({trial, d.feasible, d.ee});
      ++result.n_evaluations;
      if (d.feasible && d.ee > incumbent.ee * (1 + kTieMargin)) {
        incumbent = d;
        accepted = true;
        break;  // fresh shuffle over the reduced set
      }
    }
    if (!accepted) break;  // a full pass found no improving deactivation
  }

  auto log = std::move(result.log);
  const int evals = result.n_evaluations;
  result = from_outcome(incumbent);
  result.log = std::move(log);
  result.n_evaluations = evals;
  return result;
}

SearchResult all_on_design(const SimConfig& cfg, const ChannelSet& h,
                           PowerModelKind kind) {
  const int n = chain_count(cfg.sys, kind);
  const DesignOutcome d =
      design_precoder_given_selection(cfg, h, SelectionMask(n, true), kind);
  if (!d.feasible) throw InfeasibleError("all-on design infeasible");
  SearchResult r = from_outcome(d);
  r.log.push_back({d.mask, true, d.ee});
  r.n_evaluations = 1;
  return r;
}

SearchResult random_selection(const SimConfig& cfg, const ChannelSet& h,
                              PowerModelKind kind, std::uint64_t seed) {
  const int n = chain_count(cfg.sys, kind);
  SplitRng rng(seed, stream::kSearch, 0, 1);
  SearchResult result;
  for (int attempt = 0; attempt < 50; ++attempt) {
    const int size = 1 + static_cast<int>(rng.uniform_index(n));
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    shuffle_in_place(pool, rng);
    SelectionMask mask(n, false);
    for (int i = 0; i < size; ++i) mask.set(pool[static_cast<std::size_t>(i)], true);
    const DesignOutcome d = design_precoder_given_selection(cfg, h, mask, kind);
    result.log.push_back({mask, d.feasible, d.ee});
    ++result.n_evaluations;
    if (d.feasible) {
      auto log = std::move(result.log);
      const int evals = result.n_evaluations;
      result = from_outcome(d);
      result.log = std::move(log);
      result.n_evaluations = evals;
      return result;
    }
  }
  throw InfeasibleError("random_selection: no feasible mask in 50 draws");
}

FcSweepResult fc_candidate_sweep(const SimConfig& cfg, const ChannelSet& h) {
  const SystemConfig& s = cfg.sys;
  FcSweepResult result;
  bool found = false;
  for (int n = 1; n <= s.n_rf; ++n) {
    SelectionMask mask(s.n_rf, false);
    for (int i = 0; i < n; ++i) mask.set(i, true);
    const DesignOutcome d =
        design_precoder_given_selection(cfg, h, mask, PowerModelKind::FCEquivalent);
    if (!d.feasible) {
      result.log.push_back({mask, false, 0.0});
      continue;
    }
    const FactorizationResult fr = fc_match(stack_precoders(d.f), n, s);
    const PrecoderSet f_eff = fr.precoder.effective_fd();
    const Real rate = spectral_efficiency(h, f_eff, s.n_streams, s.noise_var);
    const Real power = total_power_fc(fr.precoder, s);
    const Real ee = rate / power;
    result.log.push_back({mask, true, ee});
    if (!found || ee > result.ee) {
      result.best_n = n;
      result.precoder = fr.precoder;
      result.rate_bits = rate;
      result.power = power;
      result.ee = ee;
      result.residual = fr.residual;
      found = true;
    }
  }
  if (!found) {
    throw InfeasibleError("fc_candidate_sweep: every candidate infeasible");
  }
  return result;
}

void write_mask_log_csv(const std::vector<MaskEval>& log,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "mask,feasible,ee\n";
  for (const MaskEval& e : log) {
    for (int i = 0; i < e.mask.size(); ++i) out << (e.mask[i] ? '1' : '0');
    out << ',' << (e.feasible ? 1 : 0) << ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", e.ee);
    out << buf << '\n';
  }
}

}  // namespace isac
