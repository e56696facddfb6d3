// Acceptance gate for the simulator: ten end-to-end checks, one line each.
// Run with no arguments for the full gate or with --only N for one criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstring>
#include <exception>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isac/channel.hpp"
#include "isac/comm_metrics.hpp"
#include "isac/config.hpp"
#include "isac/fd_optimizer.hpp"
#include "isac/harness.hpp"
#include "isac/hybrid_factorization.hpp"
#include "isac/power.hpp"
#include "isac/radar.hpp"
#include "isac/rng.hpp"
#include "isac/selection_search.hpp"
#include "isac/types.hpp"

namespace {

using namespace isac;

char detail_buf[512];

CMat random_gaussian(SplitRng& rng, int rows, int cols, Real scale = 1.0) {
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.cgauss(1.0);
  return m;
}

CMat random_phases(SplitRng& rng, int rows, int cols) {
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Real phi = rng.uniform(0.0, 6.283185307179586);
      m(r, c) = Complex(std::cos(phi), std::sin(phi));
    }
  }
  return m;
}

PrecoderSet random_precoder(SplitRng& rng, int n_sub, int n_tx, int n_cols,
                            Real scale) {
  PrecoderSet f(n_sub, n_tx, n_cols);
  for (int k = 0; k < n_sub; ++k) f.mats[k] = random_gaussian(rng, n_tx, n_cols, scale);
  return f;
}

bool history_nonincreasing(const std::vector<Real>& h) {
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i] > h[i - 1] * (1 + 1e-9) + 1e-12) return false;
  return true;
}

// Single active column steered toward theta, using the frame budget exactly.
PrecoderSet steering_precoder(const SystemConfig& sys, Real theta) {
  PrecoderSet f(sys.n_sub, sys.n_tx, sys.n_cols());
  const Real col_scale = std::sqrt(sys.p_tx / sys.n_sub / sys.n_tx);
  for (int k = 0; k < sys.n_sub; ++k)
    f.mats[k].col(0) = col_scale * tx_steering(sys, k, theta);
  return f;
}

// --------------------------------------------------------------------------
// 1. The rate surrogate at closed-form receivers and weights equals the
//    spectral efficiency on 200 random small instances.
bool criterion_1() {
  SplitRng rng(0xAC01, stream::kGeneric);
  Real worst = 0;
  for (int i = 0; i < 200; ++i) {
    const int n_rx = 1 + static_cast<int>(rng.uniform_index(2));
    const int n_users = 1 + static_cast<int>(rng.uniform_index(2));
    const int n_s = 1 + static_cast<int>(rng.uniform_index(n_rx));
    const int n_cols = n_users * n_s;
    const int n_tx =
        n_cols + static_cast<int>(rng.uniform_index(8 - n_cols + 1));
    const int n_sub = 1 + static_cast<int>(rng.uniform_index(4));
    const Real noise_var = rng.uniform(0.25, 4.0);

    ChannelSet h;
    h.h.assign(static_cast<std::size_t>(n_users), {});
    for (auto& per_user : h.h) {
      per_user.reserve(static_cast<std::size_t>(n_sub));
      for (int k = 0; k < n_sub; ++k)
        per_user.push_back(random_gaussian(rng, n_rx, n_tx));
    }
    const PrecoderSet f =
        random_precoder(rng, n_sub, n_tx, n_cols, rng.uniform(0.2, 3.0));

    const Real se = spectral_efficiency(h, f, n_s, noise_var);
    const WmmseState st = optimal_receivers_and_weights(h, f, n_s, noise_var);
    const Real surrogate = wmmse_rate(h, f, st, n_s, noise_var);
    const Real rel = std::abs(se - surrogate) / std::max(1.0, std::abs(se));
    worst = std::max(worst, rel);
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "worst relative gap %.3e over 200 instances (tol 1e-8)", worst);
  return worst <= 1e-8;
}

// --------------------------------------------------------------------------
// 2. Within every fixed-penalty segment of the optimizer trace the surrogate
//    objective never drops by more than tol_obj, across 50 setup-1 draws.
bool criterion_2() {
  const SimConfig cfg = preset_config("setup1");
  Real worst_drop = 0;
  long segments = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const ChannelSet h = generate_channel(cfg.sys, cfg.channel, 7202,
                                          static_cast<std::uint64_t>(trial));
    const DesignOutcome out = run_annealed_design(cfg, h, PowerModelKind::FD);
    const auto& rec = out.trace.records;
    for (std::size_t i = 1; i < rec.size(); ++i) {
      if (rec[i].outer != rec[i - 1].outer) continue;
      ++segments;
      worst_drop =
          std::max(worst_drop, rec[i - 1].surrogate_obj - rec[i].surrogate_obj);
    }
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "worst in-segment drop %.3e over %ld steps (tol %.1e)",
                worst_drop, segments, cfg.opt.tol_obj);
  return worst_drop <= cfg.opt.tol_obj;
}

// --------------------------------------------------------------------------
// 3. Relaxation sandwich on 10^4 random (F, F_ref, lambda) samples: the
//    linearized chain cost majorizes the smooth one, the linearized beam
//    power minorizes the exact one, and both touch at the reference.
bool criterion_3() {
  SplitRng rng(0xAC03, stream::kGeneric);
  Real worst_power_viol = 0, worst_beam_viol = 0, worst_eq = 0;
  for (int s = 0; s < 10000; ++s) {
    SystemConfig sys;
    sys.n_tx = 2 + static_cast<int>(rng.uniform_index(7));
    sys.n_rf = sys.n_tx;
    sys.n_sub = 1 + static_cast<int>(rng.uniform_index(4));
    sys.n_users = 1;
    sys.n_streams = 1;
    const int n_cols =
        1 + static_cast<int>(rng.uniform_index(std::min(sys.n_tx, 4)));
    const Real lambda = std::pow(10.0, rng.uniform(-1.0, 3.0));
    const PrecoderSet f =
        random_precoder(rng, sys.n_sub, sys.n_tx, n_cols, rng.uniform(0.1, 2.0));
    const PrecoderSet ref =
        random_precoder(rng, sys.n_sub, sys.n_tx, n_cols, rng.uniform(0.1, 2.0));

    const GroupLayout layout = GroupLayout::per_row(sys.n_tx);
    const RVec norms = f.group_norms(layout);
    const RVec ref_norms = ref.group_norms(layout);
    const Real smooth = approx_total_power_fd(f, sys, lambda);
    const Real lin = f.total_tx_power() / sys.eta_pa + sys.p_bb +
                     sys.p_rf * linearized_chain_count(norms, ref_norms, lambda);
    const Real p_scale = std::max(1.0, std::abs(smooth));
    worst_power_viol = std::max(worst_power_viol, (smooth - lin) / p_scale);
    const Real lin_at_ref =
        ref.total_tx_power() / sys.eta_pa + sys.p_bb +
        sys.p_rf * linearized_chain_count(ref_norms, ref_norms, lambda);
    const Real smooth_at_ref = approx_total_power_fd(ref, sys, lambda);
    worst_eq = std::max(worst_eq, std::abs(lin_at_ref - smooth_at_ref) /
                                      std::max(1.0, std::abs(smooth_at_ref)));

    const int k = static_cast<int>(rng.uniform_index(sys.n_sub));
    const CVec a = tx_steering(sys, k, rng.uniform(-1.0, 1.0));
    const Real exact = beam_power(f.mats[static_cast<std::size_t>(k)], a);
    const Real lin_beam = linearized_beam_power(
        f.mats[static_cast<std::size_t>(k)], ref.mats[static_cast<std::size_t>(k)], a);
    const Real b_scale = std::max(1.0, exact);
    worst_beam_viol = std::max(worst_beam_viol, (lin_beam - exact) / b_scale);
    const Real beam_at_ref = beam_power(ref.mats[static_cast<std::size_t>(k)], a);
    const Real lin_beam_at_ref = linearized_beam_power(
        ref.mats[static_cast<std::size_t>(k)], ref.mats[static_cast<std::size_t>(k)], a);
    worst_eq = std::max(worst_eq, std::abs(lin_beam_at_ref - beam_at_ref) /
                                      std::max(1.0, beam_at_ref));
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "majorizer slack %.2e, minorizer slack %.2e, reference gap %.2e",
                worst_power_viol, worst_beam_viol, worst_eq);
  return worst_power_viol <= 1e-9 && worst_beam_viol <= 1e-9 && worst_eq <= 1e-10;
}

// --------------------------------------------------------------------------
// 4. On 20 exhaustively searchable instances the greedy search never beats
//    brute force and the annealed design lands within 5% on at least 80%.
bool criterion_4() {
  int within = 0;
  int feasible = 0;
  bool dominance = true;
  Real worst_ratio = 1.0;
  for (int i = 0; i < 20; ++i) {
    SimConfig cfg = preset_config("setup1");
    apply_architecture(cfg, Architecture::FD, 4 + (i % 3), "setup1");
    const ChannelSet h = generate_channel(cfg.sys, cfg.channel, 4404,
                                          static_cast<std::uint64_t>(i));
    const SearchResult brute = brute_force_search(cfg, h, PowerModelKind::FD);
    SplitRng seed_rng(4404, stream::kSearch, static_cast<std::uint64_t>(i));
    const SearchResult greedy =
        greedy_search(cfg, h, PowerModelKind::FD, seed_rng.next_u64());
    const DesignOutcome prop = run_annealed_design(cfg, h, PowerModelKind::FD);

    if (greedy.ee > brute.ee * (1 + 1e-9)) dominance = false;
    if (prop.feasible) {
      ++feasible;
      worst_ratio = std::min(worst_ratio, prop.ee / brute.ee);
      if (prop.ee >= 0.95 * brute.ee) ++within;
    }
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "greedy<=brute %s, within 5%% on %d/20 (worst ratio %.4f, "
                "%d feasible)",
                dominance ? "always" : "VIOLATED", within, worst_ratio, feasible);
  return dominance && within >= 16;
}

// --------------------------------------------------------------------------
// 5. Hybrid factorization: exactly factorizable references are recovered,
//    every coordinate sweep is monotone, and power normalization never
//    inflates the matching error by more than 2x on 100 random instances.
bool criterion_5() {
  SplitRng rng(0xAC05, stream::kGeneric);
  bool monotone = true;
  Real worst_recovery = 0;

  const auto fc_system = [](int n_tx, int n_rf, int n_sub, Real p_tx) {
    SystemConfig sys;
    sys.n_tx = n_tx;
    sys.n_rf = n_rf;
    sys.n_sub = n_sub;
    sys.n_users = 2;
    sys.n_streams = 2;
    sys.p_tx = p_tx;
    return sys;
  };

  // Unit-modulus-realizable references: a rank-r product with n_active
  // spare-free chains for r = 1 and n_active >= 2r otherwise.
  for (int rep = 0; rep < 4; ++rep) {
    const SystemConfig sys = fc_system(12, 4, 2, 1e9);
    const CMat f_opt =
        random_phases(rng, 12, 1) * random_gaussian(rng, 1, 8);
    const FactorizationResult r = fc_match(f_opt, 1, sys);
    worst_recovery = std::max(worst_recovery, r.residual / f_opt.norm());
    monotone = monotone && history_nonincreasing(r.residual_history);
  }
  FactorizationOptions tight;
  tight.rel_tol = 1e-14;
  for (int rank = 2; rank <= 4; ++rank) {
    for (int rep = 0; rep < 3; ++rep) {
      const SystemConfig sys = fc_system(16, 8, 4, 1e9);
      const CMat f_opt =
          random_phases(rng, 16, rank) * random_gaussian(rng, rank, 16);
      tight.max_sweeps = 2000;
      const FactorizationResult r = fc_match(f_opt, 8, sys, tight);
      worst_recovery = std::max(worst_recovery, r.residual / f_opt.norm());
      monotone = monotone && history_nonincreasing(r.residual_history);
    }
  }
  for (int rep = 0; rep < 3; ++rep) {
    const SystemConfig sys = fc_system(16, 4, 4, 1e9);
    const CMat f_opt =
        random_phases(rng, 16, 2) * random_gaussian(rng, 2, 16);
    tight.max_sweeps = 20000;
    const FactorizationResult r = fc_match(f_opt, 4, sys, tight);
    worst_recovery = std::max(worst_recovery, r.residual / f_opt.norm());
    monotone = monotone && history_nonincreasing(r.residual_history);
  }
  // Block-diagonal references for the subarray factorizer.
  for (int rep = 0; rep < 4; ++rep) {
    const SystemConfig sys = fc_system(12, 3, 3, 1e9);
    CMat f_opt = CMat::Zero(12, 12);
    for (int b = 0; b < 3; ++b) {
      f_opt.middleRows(4 * b, 4) =
          random_phases(rng, 4, 1) * random_gaussian(rng, 1, 12);
    }
    const FactorizationResult r = pc_match(f_opt, sys);
    worst_recovery = std::max(worst_recovery, r.residual / f_opt.norm());
    monotone = monotone && history_nonincreasing(r.residual_history);
  }

  // Random references that are not factorizable, with the budget pinned at a
  // third of the reference energy. That forces a genuine power clamp on every
  // instance (least-squares products are projections, so overruns this large
  // never arise from the design pipeline itself) while staying inside the
  // regime where a pure rescale can keep the error bounded.
  Real worst_inflation = 0;
  for (int i = 0; i < 100; ++i) {
    const bool subarray = i >= 50;
    const int n_rf = subarray ? 4 : 4 + static_cast<int>(rng.uniform_index(5));
    const CMat f_opt = random_gaussian(rng, 16, 16);
    const SystemConfig sys =
        fc_system(16, n_rf, 4, f_opt.squaredNorm() / 3.0);
    const FactorizationResult r =
        subarray ? pc_match(f_opt, sys) : fc_match(f_opt, n_rf, sys);
    monotone = monotone && history_nonincreasing(r.residual_history);
    if (r.residual_unnormalized > 0) {
      worst_inflation =
          std::max(worst_inflation, r.residual / r.residual_unnormalized);
    }
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "recovery worst %.3e (tol 1e-6), sweeps monotone %s, "
                "normalization inflation worst %.3fx (tol 2x)",
                worst_recovery, monotone ? "yes" : "NO", worst_inflation);
  return worst_recovery < 1e-6 && monotone && worst_inflation <= 2.0;
}

// --------------------------------------------------------------------------
// 6. Noise-only pipeline false-alarm rate sits inside the 3-sigma binomial
//    band of the design point on both setups, with at least 1e6 cells each.
bool criterion_6() {
  bool ok = true;
  std::string parts;
  for (const char* name : {"setup1", "setup2"}) {
    SimConfig cfg = preset_config(name);
    const Real theta = cfg.scene[0].angle_rad;
    cfg.scene.clear();
    // Single steered column: the minimum-divider-spread precoder, i.e. the
    // most favorable admissible configuration for this calibration.
    const PrecoderSet f = steering_precoder(cfg.sys, theta);
    const long cells_per_trial = static_cast<long>(cfg.grid.angles().size()) *
                                 cfg.sys.n_sub * cfg.sys.n_sym;
    // Setup 2's per-cell bias sits near the band half-width at the bare 1e6
    // floor, which would leave the verdict to seed luck; three million cells
    // shrink the band enough that the measured property decides it.
    const long min_cells = std::strcmp(name, "setup1") == 0 ? 1000000 : 3000000;
    const int trials =
        static_cast<int>((min_cells + cells_per_trial - 1) / cells_per_trial) + 2;
    const SenseSummary s = sense_monte_carlo(cfg, f, 0xAC06, trials);
    const Real p = cfg.sys.p_fa;
    const Real sigma =
        std::sqrt(p * (1 - p) / static_cast<Real>(s.n_noise_cells));
    const bool in_band = std::abs(s.fa_rate - p) <= 3 * sigma;
    ok = ok && in_band && s.n_noise_cells >= min_cells;
    char piece[160];
    std::snprintf(piece, sizeof(piece), "%s fa %.4e vs %.0e (%+.2f sigma, %ld cells)",
                  name, s.fa_rate, p, (s.fa_rate - p) / sigma, s.n_noise_cells);
    if (!parts.empty()) parts += "; ";
    parts += piece;
  }
  std::snprintf(detail_buf, sizeof(detail_buf), "%s", parts.c_str());
  return ok;
}

// --------------------------------------------------------------------------
// 7. Empirical noise-cell variance of the range-Doppler map matches the
//    prediction within 5% on five precoder/angle configurations.
bool criterion_7() {
  struct Config {
    const char* preset;
    bool steered;
    Real theta;
  };
  const Config configs[5] = {{"setup1", true, 0.4712},
                             {"setup1", true, -0.3},
                             {"setup1", false, 0.1},
                             {"setup2", true, -0.0524},
                             {"setup2", false, 0.45}};
  SplitRng prec_rng(0xAC07, stream::kGeneric);
  Real worst = 0;
  for (const Config& c : configs) {
    const SimConfig cfg = preset_config(c.preset);
    const SystemConfig& sys = cfg.sys;
    const PrecoderSet f =
        c.steered ? steering_precoder(sys, c.theta)
                  : random_precoder(prec_rng, sys.n_sub, sys.n_tx, sys.n_cols(),
                                    std::sqrt(sys.p_tx / (sys.n_sub * sys.n_tx *
                                                          sys.n_cols())));
    SplitRng sym_rng(0xAC07, stream::kSymbol);
    const SymbolGrid symbols = draw_symbols(sys, sym_rng);
    const Real cells = static_cast<Real>(sys.n_sub) * sys.n_sym;
    const Real predicted = predict_rd_noise_var(sys, f, c.theta, 1.0, &symbols);

    Real acc = 0;
    const int n_trials = 10000;
    for (int trial = 0; trial < n_trials; ++trial) {
      SplitRng noise_rng(0xAC07, stream::kNoise,
                         static_cast<std::uint64_t>(trial));
      const ReceivedGrid rx =
          synthesize_rx(sys, f, symbols, TargetScene{}, noise_rng);
      const DividedGrid div = beamform_and_divide(sys, rx, f, symbols, c.theta);
      const CMat z = rd_transform(CMat(div.alpha * div.z));
      acc += z.squaredNorm() / cells;
    }
    const Real measured = acc / n_trials;
    worst = std::max(worst, std::abs(measured / predicted - 1.0));
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "worst relative error %.4f over 5 configs x 1e4 trials (tol 0.05)",
                worst);
  return worst <= 0.05;
}

// --------------------------------------------------------------------------
// 8. Noiseless on-grid targets peak exactly at their forced bins on 50 random
//    scenes, and the range-Doppler transform is unitary.
bool criterion_8() {
  SplitRng rng(0xAC08, stream::kGeneric);
  bool ok = true;
  Real worst_peak_err = 0, worst_floor = 0, worst_parseval = 0;
  for (int scene_i = 0; scene_i < 50; ++scene_i) {
    const SimConfig cfg = preset_config(scene_i % 2 == 0 ? "setup1" : "setup2");
    const SystemConfig& sys = cfg.sys;
    const int n_targets = scene_i < 30 ? 1 : 2;
    const Real theta = rng.uniform(-1.0, 1.0);

    TargetScene scene;
    std::vector<std::pair<int, int>> bins;
    while (static_cast<int>(scene.size()) < n_targets) {
      const int k0 = static_cast<int>(rng.uniform_index(sys.n_sub));
      const int l0_signed = -(sys.n_sym / 2 - 1) +
                            static_cast<int>(rng.uniform_index(sys.n_sym - 1));
      const int l0 = ((l0_signed % sys.n_sym) + sys.n_sym) % sys.n_sym;
      bool clash = false;
      for (const auto& b : bins) clash = clash || (b.first == k0 && b.second == l0);
      if (clash) continue;
      Target t;
      t.angle_rad = theta;
      t.range_m = kSpeedOfLight * (k0 * sys.delay_resolution()) / 2.0;
      t.velocity_mps = kSpeedOfLight * (l0_signed * sys.doppler_resolution()) /
                       (2.0 * sys.carrier_hz);
      t.rcs_db = rng.uniform(-20.0, -10.0);
      t.rcs_phase_rad = rng.uniform(0.0, 6.283185307179586);
      scene.push_back(t);
      bins.emplace_back(k0, l0);
    }

    const PrecoderSet f = steering_precoder(sys, theta);
    SplitRng sym_rng(0xAC08, stream::kSymbol, static_cast<std::uint64_t>(scene_i));
    SplitRng unused(0xAC08, stream::kNoise);
    const SymbolGrid symbols = draw_symbols(sys, sym_rng);
    const ReceivedGrid rx = synthesize_rx(sys, f, symbols, scene, unused, false);

    const DividedGrid div = beamform_and_divide(sys, rx, f, symbols, theta);
    const CMat map = rd_transform(div.z);
    const Real parseval =
        std::abs(map.squaredNorm() - div.z.squaredNorm()) /
        std::max(1.0, div.z.squaredNorm());
    worst_parseval = std::max(worst_parseval, parseval);

    const Real cell_gain =
        std::sqrt(static_cast<Real>(sys.n_sub) * sys.n_sym) * sys.n_rx_sen /
        div.alpha;
    Real min_peak = 1e300;
    for (std::size_t t = 0; t < scene.size(); ++t) {
      const auto [k_exp, l_exp] = expected_bins(sys, scene[t]);
      if (k_exp != bins[t].first || l_exp != bins[t].second) ok = false;
      const Real expect = cell_gain * std::abs(scene[t].gain(sys.noise_var_sen));
      const Real got = std::abs(map(k_exp, l_exp));
      worst_peak_err =
          std::max(worst_peak_err, std::abs(got - expect) / expect);
      min_peak = std::min(min_peak, expect);
    }
    Real floor = 0;
    for (int k = 0; k < sys.n_sub; ++k) {
      for (int l = 0; l < sys.n_sym; ++l) {
        bool is_bin = false;
        for (const auto& b : bins) is_bin = is_bin || (b.first == k && b.second == l);
        if (!is_bin) floor = std::max(floor, std::abs(map(k, l)));
      }
    }
    worst_floor = std::max(worst_floor, floor / min_peak);
  }
  // Unitarity on raw random grids as well.
  for (int rep = 0; rep < 50; ++rep) {
    const CMat z = random_gaussian(rng, 3 + static_cast<int>(rng.uniform_index(30)),
                                   3 + static_cast<int>(rng.uniform_index(30)));
    const CMat out = rd_transform(z);
    worst_parseval = std::max(
        worst_parseval, std::abs(out.squaredNorm() - z.squaredNorm()) /
                            std::max(1.0, z.squaredNorm()));
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "bins exact %s, peak err %.2e, leakage floor %.2e, Parseval %.2e",
                ok ? "yes" : "NO", worst_peak_err, worst_floor, worst_parseval);
  return ok && worst_peak_err < 1e-9 && worst_floor < 1e-8 &&
         worst_parseval < 1e-10;
}

// --------------------------------------------------------------------------
// 9. Power-threshold sweep trends on setup-1: active chains grow with the
//    beam floor, the annealed design dominates all-on and random selection in
//    the paired mean, and detection probability does not degrade.
bool criterion_9() {
  const SimConfig base = preset_config("setup1");
  SweepOptions opt;
  opt.pth_grid = {0.25, 0.5, 1.0, 2.0};
  opt.methods = {Method::Proposed, Method::Greedy, Method::Random, Method::AllOn};
  opt.trials = 50;
  opt.sense_trials = 8;
  opt.seed = 0xAC09;
  opt.n_threads = 0;
  const std::vector<SweepCell> cells = run_sweep(base, Architecture::FD, opt);

  const int n_methods = static_cast<int>(opt.methods.size());
  const auto cell_at = [&](int pi, Method m) -> const SweepCell& {
    for (int mi = 0; mi < n_methods; ++mi) {
      const SweepCell& c = cells[static_cast<std::size_t>(pi * n_methods + mi)];
      if (c.method == m) return c;
    }
    throw std::logic_error("sweep cell lookup failed");
  };
  const auto mean_of = [](const SweepCell& c, auto field) {
    Real acc = 0;
    int n = 0;
    for (const RunResult& r : c.runs) {
      if (!r.feasible) continue;
      acc += field(r);
      ++n;
    }
    return n > 0 ? acc / n : 0.0;
  };

  // Trend step for the mean active count between adjacent grid points. The
  // greedy search is seeded-stochastic, so its mean wobbles by a fraction of
  // the paired standard error; a drop is only a violation when it exceeds the
  // 97.5% one-sided allowance. Systematic decreases fail by many sigma.
  const auto active_step_ok = [](const SweepCell& lo, const SweepCell& hi) {
    std::vector<Real> diffs;
    for (std::size_t t = 0; t < lo.runs.size(); ++t) {
      if (!lo.runs[t].feasible || !hi.runs[t].feasible) continue;
      diffs.push_back(Real(hi.runs[t].n_active) - Real(lo.runs[t].n_active));
    }
    const MeanCi ci = mean_ci(diffs);
    return !diffs.empty() && ci.mean >= -ci.ci - 1e-9;
  };

  bool active_monotone = true;
  bool dominance = true;
  bool pd_monotone = true;
  Real prev_pd = -1;
  std::string trend;
  for (std::size_t pi = 0; pi < opt.pth_grid.size(); ++pi) {
    const SweepCell& prop = cell_at(static_cast<int>(pi), Method::Proposed);
    const SweepCell& greedy = cell_at(static_cast<int>(pi), Method::Greedy);
    const SweepCell& random = cell_at(static_cast<int>(pi), Method::Random);
    const SweepCell& allon = cell_at(static_cast<int>(pi), Method::AllOn);

    const Real active_prop =
        mean_of(prop, [](const RunResult& r) { return Real(r.n_active); });
    const Real active_greedy =
        mean_of(greedy, [](const RunResult& r) { return Real(r.n_active); });
    if (pi > 0) {
      const SweepCell& prop_lo = cell_at(static_cast<int>(pi - 1), Method::Proposed);
      const SweepCell& greedy_lo = cell_at(static_cast<int>(pi - 1), Method::Greedy);
      if (!active_step_ok(prop_lo, prop)) active_monotone = false;
      if (!active_step_ok(greedy_lo, greedy)) active_monotone = false;
    }

    // Paired mean EE differences on the shared channel draws.
    Real diff_allon = 0, diff_random = 0;
    int pairs = 0;
    for (std::size_t t = 0; t < prop.runs.size(); ++t) {
      if (!prop.runs[t].feasible || !allon.runs[t].feasible ||
          !random.runs[t].feasible)
        continue;
      diff_allon += prop.runs[t].ee - allon.runs[t].ee;
      diff_random += prop.runs[t].ee - random.runs[t].ee;
      ++pairs;
    }
    if (pairs == 0 || diff_allon / pairs < -1e-9 || diff_random / pairs < -1e-9)
      dominance = false;

    Real pd = 0;
    int pd_n = 0;
    for (const RunResult& r : prop.runs) {
      if (r.feasible && r.p_d.has_value()) {
        pd += *r.p_d;
        ++pd_n;
      }
    }
    pd = pd_n > 0 ? pd / pd_n : 0.0;
    if (pd < prev_pd - 1e-9) pd_monotone = false;
    prev_pd = pd;

    char piece[96];
    std::snprintf(piece, sizeof(piece),
                  "%sp_th %.2f: chains %.2f/%.2f, pd %.3f",
                  pi == 0 ? "" : "; ", opt.pth_grid[pi], active_prop,
                  active_greedy, pd);
    trend += piece;
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "chains monotone %s, paired dominance %s, pd monotone %s (%s)",
                active_monotone ? "yes" : "NO", dominance ? "yes" : "NO",
                pd_monotone ? "yes" : "NO", trend.c_str());
  return active_monotone && dominance && pd_monotone;
}

// --------------------------------------------------------------------------
// 10. The fully-connected candidate sweep self-adjusts: with 4 or 8 chains
//     available the best energy efficiency agrees within 10% on 20 matched
//     channel draws.
bool criterion_10() {
  SimConfig cfg4 = preset_config("setup1");
  apply_architecture(cfg4, Architecture::FC, 4, "setup1");
  SimConfig cfg8 = preset_config("setup1");
  apply_architecture(cfg8, Architecture::FC, 8, "setup1");

  Real worst = 0;
  std::vector<Real> gaps(20, 0.0);
  std::vector<int> n4(20, 0), n8(20, 0);
  parallel_for(20, 0, [&](int t) {
    const ChannelSet h = generate_channel(cfg4.sys, cfg4.channel, 0xAC10,
                                          static_cast<std::uint64_t>(t));
    const FcSweepResult a = fc_candidate_sweep(cfg4, h);
    const FcSweepResult b = fc_candidate_sweep(cfg8, h);
    gaps[static_cast<std::size_t>(t)] =
        std::abs(a.ee - b.ee) / std::max(a.ee, b.ee);
    n4[static_cast<std::size_t>(t)] = a.best_n;
    n8[static_cast<std::size_t>(t)] = b.best_n;
  });
  int agree = 0;
  for (int t = 0; t < 20; ++t) {
    worst = std::max(worst, gaps[static_cast<std::size_t>(t)]);
    if (gaps[static_cast<std::size_t>(t)] <= 0.10) ++agree;
  }
  int min_n = 99, max_n = 0;
  for (int t = 0; t < 20; ++t) {
    min_n = std::min({min_n, n4[static_cast<std::size_t>(t)], n8[static_cast<std::size_t>(t)]});
    max_n = std::max({max_n, n4[static_cast<std::size_t>(t)], n8[static_cast<std::size_t>(t)]});
  }
  std::snprintf(detail_buf, sizeof(detail_buf),
                "within 10%% on %d/20 draws, worst gap %.3f, chosen chain "
                "counts span [%d, %d]",
                agree, worst, min_n, max_n);
  return agree == 20;
}

struct Criterion {
  int id;
  const char* label;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "rate surrogate equality at closed-form receivers", criterion_1},
    {2, "surrogate monotone within fixed-penalty segments", criterion_2},
    {3, "relaxation sandwich bounds", criterion_3},
    {4, "search dominance and near-optimality vs brute force", criterion_4},
    {5, "hybrid factorization recovery and normalization", criterion_5},
    {6, "CFAR false-alarm calibration", criterion_6},
    {7, "range-Doppler noise variance prediction", criterion_7},
    {8, "on-grid sensing geometry and transform unitarity", criterion_8},
    {9, "power-threshold sweep trends", criterion_9},
    {10, "fully-connected chain-count self-adjustment", criterion_10},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  if (only < 0 || only > 10) {
    std::fprintf(stderr, "criterion id must be 1..10\n");
    return 2;
  }

  int failures = 0;
  int ran = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    detail_buf[0] = '\0';
    try {
      pass = c.fn();
    } catch (const std::exception& e) {
      std::snprintf(detail_buf, sizeof(detail_buf), "exception: %s", e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %2d: %s -- %s [%.1f s]\n",
                pass ? "PASS" : "FAIL", c.id, c.label, detail_buf, secs);
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion matched --only %d\n", only);
    return 2;
  }
  if (only == 0) {
    std::printf("passed %d/%d criteria\n", ran - failures, ran);
  }
  return failures == 0 ? 0 : 1;
}
