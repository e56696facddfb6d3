#ifndef ISAC_SELECTION_SEARCH_HPP
#define ISAC_SELECTION_SEARCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "isac/channel.hpp"
#include "isac/config.hpp"
#include "isac/fd_optimizer.hpp"
#include "isac/hybrid_factorization.hpp"
#include "isac/types.hpp"

namespace isac {

/// One audited mask evaluation (also the CSV log row format).
struct MaskEval {
  SelectionMask mask;
  bool feasible = false;
  Real ee = 0;
};

struct SearchResult {
  SelectionMask mask;
  PrecoderSet f;
  Real rate_bits = 0;
  Real power = 0;
  Real ee = 0;
  int n_evaluations = 0;
  std::vector<MaskEval> log;
};

/// Enumerates every nonempty selection (guard: at most 16 chains) and keeps
/// the feasible mask with the best exact energy efficiency. Ties within 1e-9
/// relative prefer fewer active chains, then the lexicographically smallest
/// mask. Throws InfeasibleError when no mask admits a feasible design.
SearchResult brute_force_search(const SimConfig& cfg, const ChannelSet& h,
                                PowerModelKind kind);

/// Greedy deactivation: starts all-on and repeatedly tries to switch off one
/// chain at a time in a freshly shuffled order, keeping a deactivation only
/// when it strictly improves the incumbent (1e-9 relative margin) and then
/// restarting the stage. Deterministic for a given seed.
SearchResult greedy_search(const SimConfig& cfg, const ChannelSet& h,
                           PowerModelKind kind, std::uint64_t seed);

/// Designs with every chain active (no selection search).
SearchResult all_on_design(const SimConfig& cfg, const ChannelSet& h,
                           PowerModelKind kind);

/// Baseline: draws a uniformly random active count, then a uniformly random
/// mask of that count, until the design is feasible (at most 50 draws).
SearchResult random_selection(const SimConfig& cfg, const ChannelSet& h,
                              PowerModelKind kind, std::uint64_t seed);

struct FcSweepResult {
  int best_n = 0;
  HybridPrecoder precoder;
  Real rate_bits = 0;
  Real power = 0;
  Real ee = 0;
  Real residual = 0;
  std::vector<MaskEval> log;  // mask = first-n pattern per candidate
};

/// Candidate sweep for the fully-connected architecture: for each chain count
/// n, designs a fully-digital reference under the n-chain circuit cost,
/// factorizes it onto n analog columns, and scores the factorized precoder's
/// exact energy efficiency. Returns the best count.
FcSweepResult fc_candidate_sweep(const SimConfig& cfg, const ChannelSet& h);

/// Writes mask-evaluation logs as CSV (columns: mask, feasible, ee).
void write_mask_log_csv(const std::vector<MaskEval>& log,
                        const std::string& path);

}  // namespace isac

#endif  // ISAC_SELECTION_SEARCH_HPP
