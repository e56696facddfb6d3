#include "isac/fd_optimizer.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace isac {

namespace {

constexpr Real kRateClamp = 1e-12;  // floor under the sqrt of the rate term
constexpr Real kMuTiny = 1e-9;      // below this the objective is power-only

struct Reduced {
  std::vector<int> rows;                  // active rows, ascending
  ChannelSet h;                           // channels restricted to those rows
  std::vector<std::vector<CVec>> steer;   // [k][target], restricted rows
};

Reduced reduce_problem(const SimConfig& cfg, const ChannelSet& h,
                       const std::vector<int>& rows) {
  const auto& s = cfg.sys;
  Reduced red;
  red.rows = rows;
  red.h.h.assign(s.n_users, std::vector<CMat>(s.n_sub));
  for (int u = 0; u < s.n_users; ++u)
    for (int k = 0; k < s.n_sub; ++k) {
      CMat m(s.n_rx, static_cast<int>(rows.size()));
      for (size_t c = 0; c < rows.size(); ++c) m.col(c) = h.at(u, k).col(rows[c]);
      red.h.h[u][k] = std::move(m);
    }
  red.steer.assign(s.n_sub, {});
  for (int k = 0; k < s.n_sub; ++k)
    for (double theta : s.target_angles_rad) {
      const CVec full = tx_steering(s, k, theta);
      CVec a(rows.size());
      for (size_t c = 0; c < rows.size(); ++c) a[c] = full[rows[c]];
      red.steer[k].push_back(std::move(a));
    }
  return red;
}

PrecoderSet expand_rows(const PrecoderSet& f_red, const std::vector<int>& rows,
                        int n_tx) {
  PrecoderSet out(f_red.n_sub(), n_tx, f_red.n_cols());
  for (int k = 0; k < f_red.n_sub(); ++k)
    for (size_t c = 0; c < rows.size(); ++c)
      out.mats[k].row(rows[c]) = f_red.mats[k].row(static_cast<int>(c));
  return out;
}

PrecoderSet restrict_rows(const PrecoderSet& f, const std::vector<int>& rows) {
  PrecoderSet out(f.n_sub(), static_cast<int>(rows.size()), f.n_cols());
  for (int k = 0; k < f.n_sub(); ++k)
    for (size_t c = 0; c < rows.size(); ++c)
      out.mats[k].row(static_cast<int>(c)) = f.mats[k].row(rows[c]);
  return out;
}

// ---- small PrecoderSet arithmetic helpers ----------------------------------

PrecoderSet scaled(const PrecoderSet& x, Real s) {
  PrecoderSet y = x;
  for (auto& m : y.mats) m *= s;
  return y;
}

void add_in_place(PrecoderSet& x, const PrecoderSet& d, Real s) {
  for (int k = 0; k < x.n_sub(); ++k) x.mats[k] += s * d.mats[k];
}

PrecoderSet blend(const PrecoderSet& a, const PrecoderSet& b, Real w) {
  PrecoderSet y = scaled(a, 1.0 - w);
  add_in_place(y, b, w);
  return y;
}

Real inner_real(const CMat& a, const CMat& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

// ---- convex subproblem ------------------------------------------------------

struct SubObjective {
  const SubproblemSpec& s;

  Real rate_bits(const PrecoderSet& f) const {
    Real acc = s.c0;
    for (int k = 0; k < f.n_sub(); ++k) {
      acc += 2.0 * inner_real(s.t[k], f.mats[k]);
      acc -= inner_real(f.mats[k], s.j[k] * f.mats[k]);
    }
    return acc / (s.n_sub * kLn2);
  }

  Real ptilde(const PrecoderSet& f) const {
    Real p = s.inv_eta * f.total_tx_power() + s.circuit_const;
    if (s.norm_coef.size() > 0)
      for (int g = 0; g < s.layout.n_groups; ++g)
        p += s.norm_coef[g] * f.group_norm(s.layout, g);
    return p;
  }

  Real value(const PrecoderSet& f) const {
    switch (s.mode) {
      case SubproblemSpec::Mode::QuadraticTransform:
        return 2.0 * s.mu * std::sqrt(std::max(rate_bits(f), kRateClamp)) -
               s.mu * s.mu * ptilde(f);
      case SubproblemSpec::Mode::WeightedLinear:
        return s.omega1 * rate_bits(f) - s.omega2 * ptilde(f);
      case SubproblemSpec::Mode::PowerMin:
        return -ptilde(f);
    }
    return 0;
  }

  PrecoderSet gradient(const PrecoderSet& f) const {
    PrecoderSet g(f.n_sub(), f.n_tx(), f.n_cols());
    Real rate_mult = 0, pow_mult = 0;
    switch (s.mode) {
      case SubproblemSpec::Mode::QuadraticTransform: {
        const Real r = rate_bits(f);
        rate_mult = (r > kRateClamp) ? s.mu / std::sqrt(r) : 0.0;
        pow_mult = s.mu * s.mu;
        break;
      }
      case SubproblemSpec::Mode::WeightedLinear:
        rate_mult = s.omega1;
        pow_mult = s.omega2;
        break;
      case SubproblemSpec::Mode::PowerMin:
        rate_mult = 0;
        pow_mult = 1.0;
        break;
    }
    const Real rc = 2.0 * rate_mult / (s.n_sub * kLn2);
    for (int k = 0; k < f.n_sub(); ++k) {
      if (rate_mult != 0) g.mats[k] = rc * (s.t[k] - s.j[k] * f.mats[k]);
      g.mats[k] -= (2.0 * pow_mult * s.inv_eta) * f.mats[k];
    }
    if (pow_mult != 0 && s.norm_coef.size() > 0) {
      for (int gi = 0; gi < s.layout.n_groups; ++gi) {
        const Real rn = f.group_norm(s.layout, gi);
        if (rn < 1e-300 || s.norm_coef[gi] == 0) continue;
        const Real c = pow_mult * s.norm_coef[gi] / rn;
        const int r0 = s.layout.first_row(gi), nr = s.layout.rows_per_group;
        for (int k = 0; k < f.n_sub(); ++k)
          g.mats[k].middleRows(r0, nr) -= c * f.mats[k].middleRows(r0, nr);
      }
    }
    return g;
  }
};

/// Dykstra projection onto the intersection of the beam-floor half-spaces and
/// the transmit power ball.
PrecoderSet project_feasible(PrecoderSet x, const SubproblemSpec& s) {
  const int n_half = static_cast<int>(s.halfspace_g.size());
  std::vector<CMat> corr(n_half);
  std::vector<Real> gnorm2(n_half);
  for (int i = 0; i < n_half; ++i) {
    corr[i] = CMat::Zero(s.halfspace_g[i].rows(), s.halfspace_g[i].cols());
    gnorm2[i] = s.halfspace_g[i].squaredNorm();
  }
  PrecoderSet ball_corr(x.n_sub(), x.n_tx(), x.n_cols());

  const int max_passes = 200;
  for (int pass = 0; pass < max_passes; ++pass) {
    for (int i = 0; i < n_half; ++i) {
      if (gnorm2[i] <= 0) continue;
      const int k = s.halfspace_k[i];
      const CMat y = x.mats[k] + corr[i];
      const Real gap = s.halfspace_b[i] - inner_real(s.halfspace_g[i], y);
      if (gap > 0) {
        x.mats[k] = y + (gap / gnorm2[i]) * s.halfspace_g[i];
      } else {
        x.mats[k] = y;
      }
      corr[i] = y - x.mats[k];
    }
    PrecoderSet y = x;
    add_in_place(y, ball_corr, 1.0);
    const Real pw = y.total_tx_power();
    if (pw > s.p_tx) {
      const Real sc = std::sqrt(s.p_tx / pw);
      x = scaled(y, sc);
    } else {
      x = y;
    }
    for (int k = 0; k < x.n_sub(); ++k)
      ball_corr.mats[k] = y.mats[k] - x.mats[k];

    Real viol = std::max(0.0, x.total_tx_power() - s.p_tx);
    for (int i = 0; i < n_half; ++i) {
      const Real gap =
          s.halfspace_b[i] - inner_real(s.halfspace_g[i], x.mats[s.halfspace_k[i]]);
      viol = std::max(viol, gap / std::max(1.0, std::abs(s.halfspace_b[i])));
    }
    if (viol < 1e-12 && pass >= 1) break;
  }
  return x;
}

}  // namespace

SubproblemResult solve_convex_subproblem(const SubproblemSpec& spec) {
  SubObjective obj{spec};
  PrecoderSet f = project_feasible(spec.f_start, spec);
  Real val = obj.value(f);
  PrecoderSet f_prev = f;
  Real t_momentum = 1.0;
  Real step = 0.5;
  int stall = 0;
  int it = 0;
  for (; it < spec.max_iters; ++it) {
    bool accepted = false;
    Real cand_val = val;
    PrecoderSet cand;

    // extrapolated trial first (momentum), plain gradient as fallback
    if (t_momentum > 1.0) {
      const Real t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      const Real theta = (t_momentum - 1.0) / t_next;
      PrecoderSet y = f;
      for (int k = 0; k < f.n_sub(); ++k)
        y.mats[k] += theta * (f.mats[k] - f_prev.mats[k]);
      PrecoderSet gy = obj.gradient(y);
      add_in_place(y, gy, step);
      cand = project_feasible(std::move(y), spec);
      cand_val = obj.value(cand);
      if (cand_val > val) {
        accepted = true;
        t_momentum = t_next;
      } else {
        t_momentum = 1.0;
      }
    }
    if (!accepted) {
      const PrecoderSet g = obj.gradient(f);
      Real local = step;
      for (int bt = 0; bt < 40; ++bt) {
        PrecoderSet y = f;
        add_in_place(y, g, local);
        cand = project_feasible(std::move(y), spec);
        cand_val = obj.value(cand);
        if (cand_val > val) {
          accepted = true;
          step = local * 1.5;
          t_momentum = std::max(t_momentum, 1.0 + 1e-9);
          break;
        }
        local *= 0.5;
        if (local < 1e-18) break;
      }
      if (!accepted) break;  // no ascent direction left at this scale
    }

    f_prev = f;
    f = std::move(cand);
    const Real improve = cand_val - val;
    val = cand_val;
    if (improve <= spec.tol * (std::abs(val) + 1e-9)) {
      if (++stall >= 2) break;
    } else {
      stall = 0;
    }
  }
  return {std::move(f), val, it};
}

// ---- shared inner iteration -------------------------------------------------

namespace {

struct LoopSetup {
  const SimConfig* cfg = nullptr;
  const Reduced* red = nullptr;
  GroupLayout layout{0, 1};  // over reduced rows
  Real unit_cost = 0;        // circuit watts per active group (relaxed mode)
  Real fixed_circuit = 0;    // p_bb + frozen chain cost (fixed mode)
  bool relaxed = false;
  // tradeoff scalarization; EE objective when omega1 < 0
  Real omega1 = -1, omega2 = -1;
};

Real relaxed_power(const LoopSetup& ls, const PrecoderSet& f, Real lambda) {
  const auto& s = ls.cfg->sys;
  Real p = f.total_tx_power() / s.eta_pa + s.p_bb;
  for (int g = 0; g < ls.layout.n_groups; ++g)
    p += ls.unit_cost * std::tanh(lambda * f.group_norm(ls.layout, g));
  return p;
}

Real loop_power(const LoopSetup& ls, const PrecoderSet& f, Real lambda) {
  if (ls.relaxed) return relaxed_power(ls, f, lambda);
  return f.total_tx_power() / ls.cfg->sys.eta_pa + ls.fixed_circuit;
}

Real reduced_beam_slack(const SimConfig& cfg, const Reduced& red,
                        const PrecoderSet& f) {
  if (cfg.sys.target_angles_rad.empty())
    return std::numeric_limits<Real>::infinity();
  Real slack = std::numeric_limits<Real>::infinity();
  for (int k = 0; k < f.n_sub(); ++k)
    for (const auto& a : red.steer[k])
      slack = std::min(slack, beam_power(f.mats[k], a) - cfg.sys.p_th);
  return slack;
}

SubproblemSpec build_subproblem(const LoopSetup& ls, const WmmseState& st,
                                const PrecoderSet& f_ref, Real mu, Real lambda) {
  const auto& s = ls.cfg->sys;
  const Reduced& red = *ls.red;
  const int n_act = static_cast<int>(red.rows.size());
  SubproblemSpec spec;
  spec.n_sub = s.n_sub;
  spec.j.assign(s.n_sub, CMat::Zero(n_act, n_act));
  spec.t.assign(s.n_sub, CMat::Zero(n_act, s.n_cols()));
  spec.c0 = 0;
  for (int k = 0; k < s.n_sub; ++k) {
    for (int u = 0; u < s.n_users; ++u) {
      const CMat& hk = red.h.at(u, k);
      const CMat uw = st.u[u][k] * st.w[u][k];
      spec.t[k].middleCols(u * s.n_streams, s.n_streams) = hk.adjoint() * uw;
      spec.j[k].noalias() += hk.adjoint() * (uw * st.u[u][k].adjoint()) * hk;
      spec.c0 += logdet_hermitian(st.w[u][k]) + s.n_streams -
                 st.w[u][k].trace().real() -
                 s.noise_var * (st.w[u][k] * (st.u[u][k].adjoint() * st.u[u][k]))
                                   .trace()
                                   .real();
    }
    spec.j[k] = hermitianized(spec.j[k]);
  }

  if (ls.omega1 >= 0) {
    spec.mode = (ls.omega1 == 0) ? SubproblemSpec::Mode::PowerMin
                                 : SubproblemSpec::Mode::WeightedLinear;
    spec.omega1 = ls.omega1;
    spec.omega2 = ls.omega2;
  } else {
    spec.mode = (mu < kMuTiny) ? SubproblemSpec::Mode::PowerMin
                               : SubproblemSpec::Mode::QuadraticTransform;
    spec.mu = mu;
  }

  spec.inv_eta = 1.0 / s.eta_pa;
  spec.layout = ls.layout;
  if (ls.relaxed) {
    spec.circuit_const = s.p_bb;
    spec.norm_coef = RVec::Zero(ls.layout.n_groups);
    for (int g = 0; g < ls.layout.n_groups; ++g) {
      const Real rn = f_ref.group_norm(ls.layout, g);
      const Real th = std::tanh(lambda * rn);
      spec.norm_coef[g] = ls.unit_cost * lambda * (1.0 - th * th);
      spec.circuit_const += ls.unit_cost * (th - lambda * (1.0 - th * th) * rn);
    }
  } else {
    spec.circuit_const = ls.fixed_circuit;
  }

  spec.p_tx = s.p_tx;
  if (s.p_th > 0) {
    for (int k = 0; k < s.n_sub; ++k) {
      for (const auto& a : red.steer[k]) {
        const CVec c = f_ref.mats[k].adjoint() * a;
        if (c.squaredNorm() <= 0)
          throw InfeasibleError("beam floor cannot be linearized at zero beam power");
        spec.halfspace_k.push_back(k);
        spec.halfspace_g.push_back(2.0 * (a * c.adjoint()));
        spec.halfspace_b.push_back(s.p_th + c.squaredNorm());
      }
    }
  }

  spec.tol = ls.cfg->opt.sub_tol;
  spec.max_iters = ls.cfg->opt.sub_iters;
  spec.f_start = f_ref;
  return spec;
}

/// Runs the block-update sweep (ratio aux, receivers/weights, convex
/// subproblem) until the surrogate objective stalls or the cap is hit.
PrecoderSet run_inner_loop(const LoopSetup& ls, PrecoderSet f, Real lambda,
                           int iter_cap, int outer_idx, OptimizerTrace* trace) {
  const auto& s = ls.cfg->sys;
  const auto& opt = ls.cfg->opt;
  Real q_prev = -std::numeric_limits<Real>::infinity();
  for (int r = 0; r < iter_cap; ++r) {
    const Real rate = spectral_efficiency(ls.red->h, f, s.n_streams, s.noise_var);
    const Real power = loop_power(ls, f, lambda);
    const Real mu = optimal_mu(rate, power);
    const WmmseState st =
        optimal_receivers_and_weights(ls.red->h, f, s.n_streams, s.noise_var);
    const SubproblemSpec spec = build_subproblem(ls, st, f, mu, lambda);
    f = solve_convex_subproblem(spec).f;

    const Real rate2 = spectral_efficiency(ls.red->h, f, s.n_streams, s.noise_var);
    const Real power2 = loop_power(ls, f, lambda);
    const Real q = (ls.omega1 >= 0)
                       ? ls.omega1 * rate2 - ls.omega2 * power2
                       : 2.0 * mu * std::sqrt(std::max(rate2, 0.0)) -
                             mu * mu * power2;
    if (trace) {
      TraceRecord rec;
      rec.outer = outer_idx;
      rec.inner = r;
      rec.lambda = ls.relaxed ? lambda : 0.0;
      rec.mu = mu;
      rec.surrogate_obj = q;
      rec.rate_bits = rate2;
      rec.power_relaxed = power2;
      const RVec norms = f.group_norms(ls.layout);
      rec.min_group_norm = norms.size() ? norms.minCoeff() : 0.0;
      rec.max_group_norm = norms.size() ? norms.maxCoeff() : 0.0;
      int active = 0;
      for (int g = 0; g < norms.size(); ++g)
        if (norms[g] >= opt.round_eps * rec.max_group_norm) ++active;
      rec.power_exact = f.total_tx_power() / s.eta_pa +
                        (ls.relaxed ? s.p_bb + ls.unit_cost * active
                                    : ls.fixed_circuit);
      rec.ee = rec.power_exact > 0 ? rate2 / rec.power_exact : 0.0;
      rec.beam_slack = reduced_beam_slack(*ls.cfg, *ls.red, f);
      rec.power_slack = s.p_tx - f.total_tx_power();
      trace->records.push_back(rec);
    }
    if (std::abs(q - q_prev) <= opt.tol_obj * std::max(1.0, std::abs(q))) break;
    q_prev = q;
  }
  return f;
}

std::vector<int> rows_of_mask(const SelectionMask& mask, const GroupLayout& layout) {
  std::vector<int> rows;
  for (int g = 0; g < layout.n_groups; ++g)
    if (mask[g])
      for (int r = 0; r < layout.rows_per_group; ++r)
        rows.push_back(layout.first_row(g) + r);
  return rows;
}

struct KindInfo {
  GroupLayout full_layout{0, 1};  // groups over the full row space
  Real unit_cost = 0;
};

KindInfo kind_info(const SystemConfig& s, PowerModelKind kind) {
  switch (kind) {
    case PowerModelKind::FD:
      return {GroupLayout::per_row(s.n_tx), s.p_rf};
    case PowerModelKind::PCEquivalent: {
      const auto c = chain_costing_pc(s);
      return {c.layout, c.cost_per_group};
    }
    case PowerModelKind::FCEquivalent:
      return {GroupLayout::per_row(s.n_tx), 0.0};  // cost handled separately
  }
  return {};
}

Real fixed_circuit_power(const SystemConfig& s, PowerModelKind kind, int count) {
  switch (kind) {
    case PowerModelKind::FD:
      return s.p_bb + s.p_rf * count;
    case PowerModelKind::PCEquivalent:
      return s.p_bb + (s.p_rf + (s.n_tx / s.n_rf) * s.p_ps) * count;
    case PowerModelKind::FCEquivalent:
      return s.p_bb + (s.p_rf + s.n_tx * s.p_ps) * count;
  }
  return s.p_bb;
}

DesignOutcome design_fixed(const SimConfig& cfg, const ChannelSet& h,
                           const SelectionMask& mask, PowerModelKind kind,
                           const PrecoderSet* warm, OptimizerTrace* trace,
                           int outer_tag) {
  const auto& s = cfg.sys;
  const KindInfo info = kind_info(s, kind);
  DesignOutcome out;
  out.mask = mask;

  std::vector<int> rows;
  if (kind == PowerModelKind::FCEquivalent) {
    rows.resize(s.n_tx);
    std::iota(rows.begin(), rows.end(), 0);
    if (mask.count() == 0) return out;
  } else {
    if (mask.size() != info.full_layout.n_groups)
      throw std::invalid_argument("selection mask does not match chain layout");
    if (mask.count() == 0) return out;
    rows = rows_of_mask(mask, info.full_layout);
  }

  SelectionMask row_mask(s.n_tx, false);
  for (int r : rows) row_mask.set(r, true);

  const Reduced red = reduce_problem(cfg, h, rows);
  LoopSetup ls;
  ls.cfg = &cfg;
  ls.red = &red;
  ls.layout = (kind == PowerModelKind::PCEquivalent)
                  ? GroupLayout::grouped(static_cast<int>(rows.size()), mask.count())
                  : GroupLayout::per_row(static_cast<int>(rows.size()));
  ls.relaxed = false;
  ls.fixed_circuit = fixed_circuit_power(s, kind, mask.count());

  PrecoderSet start;
  bool have_start = false;
  if (warm) {
    PrecoderSet w = restrict_rows(*warm, rows);
    if (w.total_tx_power() <= s.p_tx * (1.0 + 1e-12) &&
        reduced_beam_slack(cfg, red, w) >= -1e-12) {
      if (w.total_tx_power() > s.p_tx)
        w = scaled(w, std::sqrt(s.p_tx / w.total_tx_power()));
      start = std::move(w);
      have_start = true;
    }
  }
  if (!have_start) {
    const PrecoderSet init = feasible_initial_precoder(cfg, h, row_mask);
    if (init.mats.empty()) return out;  // infeasible under this mask
    start = restrict_rows(init, rows);
  }

  OptimizerTrace local;
  OptimizerTrace* tr = trace ? trace : &local;
  const int cap = std::max(cfg.opt.r_inner * 3, 24);
  const PrecoderSet f_red = run_inner_loop(ls, std::move(start), 0.0, cap,
                                           outer_tag, tr);

  out.feasible = true;
  out.f = expand_rows(f_red, rows, s.n_tx);
  out.rate_bits = spectral_efficiency(red.h, f_red, s.n_streams, s.noise_var);
  out.power = f_red.total_tx_power() / s.eta_pa + ls.fixed_circuit;
  out.ee = out.rate_bits / out.power;
  out.beam_slack = reduced_beam_slack(cfg, red, f_red);
  if (trace == nullptr) out.trace = std::move(local);
  return out;
}

}  // namespace

Real beam_power_slack(const SimConfig& cfg, const PrecoderSet& f) {
  const auto& s = cfg.sys;
  if (s.target_angles_rad.empty()) return std::numeric_limits<Real>::infinity();
  Real slack = std::numeric_limits<Real>::infinity();
  for (int k = 0; k < f.n_sub(); ++k)
    for (double theta : s.target_angles_rad)
      slack = std::min(slack, beam_power(f.mats[k], tx_steering(s, k, theta)) -
                                  s.p_th);
  return slack;
}

PrecoderSet feasible_initial_precoder(const SimConfig& cfg, const ChannelSet& h,
                                      const SelectionMask& row_mask) {
  const auto& s = cfg.sys;
  if (row_mask.size() != s.n_tx)
    throw std::invalid_argument("row mask must have one entry per antenna");
  const std::vector<int> rows = row_mask.active_indices();
  if (rows.empty()) return {};
  const Reduced red = reduce_problem(cfg, h, rows);
  const int n_act = static_cast<int>(rows.size());

  // Eigenmode component: dominant transmit directions per user and subcarrier.
  PrecoderSet mrt(s.n_sub, n_act, s.n_cols());
  for (int k = 0; k < s.n_sub; ++k)
    for (int u = 0; u < s.n_users; ++u) {
      const CMat& hk = red.h.at(u, k);
      if (hk.squaredNorm() <= 0) continue;
      Eigen::JacobiSVD<CMat> svd(hk, Eigen::ComputeThinV);
      const int take = std::min<int>(s.n_streams, svd.matrixV().cols());
      mrt.mats[k].block(0, u * s.n_streams, n_act, take) =
          svd.matrixV().leftCols(take);
    }
  if (mrt.total_tx_power() > 0)
    mrt = scaled(mrt, std::sqrt(s.p_tx / mrt.total_tx_power()));

  const bool constrained = s.p_th > 0 && !s.target_angles_rad.empty();
  if (!constrained) return expand_rows(mrt, rows, s.n_tx);

  // Sensing component: unit steering columns toward each constraint angle.
  PrecoderSet sen(s.n_sub, n_act, s.n_cols());
  for (int k = 0; k < s.n_sub; ++k)
    for (size_t t = 0; t < red.steer[k].size(); ++t) {
      const CVec& a = red.steer[k][t];
      sen.mats[k].col(static_cast<int>(t) % s.n_cols()) += a / a.norm();
    }
  if (sen.total_tx_power() > 0)
    sen = scaled(sen, std::sqrt(s.p_tx / sen.total_tx_power()));

  const auto slack_at = [&](Real w) -> Real {
    PrecoderSet f = blend(mrt, sen, w);
    const Real pw = f.total_tx_power();
    if (pw <= 0) return -std::numeric_limits<Real>::infinity();
    f = scaled(f, std::sqrt(s.p_tx / pw));
    return reduced_beam_slack(cfg, red, f);
  };

  const Real margin = 1e-7 * (1.0 + s.p_th);
  Real w_ok = -1, w_bad = 0;
  const int grid = 25;
  for (int i = 0; i <= grid; ++i) {
    const Real w = static_cast<Real>(i) / grid;
    if (slack_at(w) >= margin) {
      w_ok = w;
      break;
    }
    w_bad = w;
  }
  if (w_ok < 0) return {};  // even the pure sensing blend misses the floor
  if (w_ok > 0) {
    for (int it = 0; it < 30; ++it) {
      const Real mid = 0.5 * (w_ok + w_bad);
      if (slack_at(mid) >= margin)
        w_ok = mid;
      else
        w_bad = mid;
    }
  }
  PrecoderSet f = blend(mrt, sen, w_ok);
  f = scaled(f, std::sqrt(s.p_tx / f.total_tx_power()));
  return expand_rows(f, rows, s.n_tx);
}

DesignOutcome design_precoder_given_selection(const SimConfig& cfg,
                                              const ChannelSet& h,
                                              const SelectionMask& mask,
                                              PowerModelKind kind) {
  return design_fixed(cfg, h, mask, kind, nullptr, nullptr, 0);
}

DesignOutcome run_annealed_design(const SimConfig& cfg, const ChannelSet& h,
                       PowerModelKind kind) {
  if (kind == PowerModelKind::FCEquivalent)
    throw std::invalid_argument(
        "joint selection needs per-row or per-subarray chains; use the "
        "candidate sweep for the fully-connected front end");
  const auto& s = cfg.sys;
  const auto& opt = cfg.opt;
  const KindInfo info = kind_info(s, kind);

  const SelectionMask all_rows(s.n_tx, true);
  PrecoderSet f_full = feasible_initial_precoder(cfg, h, all_rows);
  if (f_full.mats.empty())
    throw InfeasibleError("no feasible initial precoder within the power budget");

  std::vector<int> rows(s.n_tx);
  std::iota(rows.begin(), rows.end(), 0);
  const Reduced red = reduce_problem(cfg, h, rows);

  LoopSetup ls;
  ls.cfg = &cfg;
  ls.red = &red;
  ls.layout = info.full_layout;
  ls.unit_cost = info.unit_cost;
  ls.relaxed = true;

  DesignOutcome out;
  PrecoderSet f = restrict_rows(f_full, rows);
  Real lambda = opt.lambda0;
  for (int stage = 0; stage < opt.r_outer; ++stage) {
    f = run_inner_loop(ls, std::move(f), lambda, opt.r_inner, stage, &out.trace);
    const RVec norms = f.group_norms(info.full_layout);
    const Real max_norm = norms.maxCoeff();
    Real min_active = std::numeric_limits<Real>::infinity();
    for (int g = 0; g < norms.size(); ++g)
      if (norms[g] >= opt.round_eps * max_norm)
        min_active = std::min(min_active, norms[g]);
    if (lambda * min_active > opt.lambda_stop) break;
    lambda *= opt.nu;
  }

  // Round chain activity, then re-solve with the selection frozen.
  const RVec norms = f.group_norms(info.full_layout);
  const Real max_norm = norms.maxCoeff();
  SelectionMask mask(info.full_layout.n_groups, false);
  int arg_max = 0;
  for (int g = 0; g < norms.size(); ++g) {
    if (norms[g] >= opt.round_eps * max_norm) mask.set(g, true);
    if (norms[g] > norms[arg_max]) arg_max = g;
  }
  if (mask.count() == 0) mask.set(arg_max, true);

  const PrecoderSet warm = expand_rows(f, rows, s.n_tx);
  DesignOutcome fixed =
      design_fixed(cfg, h, mask, kind, &warm, &out.trace, opt.r_outer);
  while (!fixed.feasible && mask.count() < info.full_layout.n_groups) {
    // rounding dropped a group the beam floor still needs: re-add by norm
    int best = -1;
    for (int g = 0; g < norms.size(); ++g)
      if (!mask[g] && (best < 0 || norms[g] > norms[best])) best = g;
    mask.set(best, true);
    fixed = design_fixed(cfg, h, mask, kind, &warm, &out.trace, opt.r_outer);
  }
  if (!fixed.feasible)
    throw InfeasibleError("selection repair failed with every chain active");

  out.feasible = true;
  out.f = std::move(fixed.f);
  out.mask = std::move(fixed.mask);
  out.rate_bits = fixed.rate_bits;
  out.power = fixed.power;
  out.ee = fixed.ee;
  out.beam_slack = fixed.beam_slack;
  return out;
}

TradeoffPoint run_tradeoff_point(const SimConfig& cfg, const ChannelSet& h,
                                 Real omega1, Real omega2, PowerModelKind kind) {
  if (omega1 < 0 || omega2 < 0)
    throw std::invalid_argument("tradeoff weights must be nonnegative");
  if (kind == PowerModelKind::FCEquivalent)
    throw std::invalid_argument("tradeoff selection not defined for FC");
  const auto& s = cfg.sys;
  const auto& opt = cfg.opt;
  const KindInfo info = kind_info(s, kind);

  const SelectionMask all_rows(s.n_tx, true);
  PrecoderSet f_full = feasible_initial_precoder(cfg, h, all_rows);
  if (f_full.mats.empty())
    throw InfeasibleError("no feasible initial precoder within the power budget");

  std::vector<int> rows(s.n_tx);
  std::iota(rows.begin(), rows.end(), 0);
  const Reduced red = reduce_problem(cfg, h, rows);

  LoopSetup ls;
  ls.cfg = &cfg;
  ls.red = &red;
  ls.layout = info.full_layout;
  ls.unit_cost = info.unit_cost;
  ls.relaxed = true;
  ls.omega1 = omega1;
  ls.omega2 = omega2;

  PrecoderSet f = restrict_rows(f_full, rows);
  Real lambda = opt.lambda0;
  OptimizerTrace trace;
  for (int stage = 0; stage < opt.r_outer; ++stage) {
    f = run_inner_loop(ls, std::move(f), lambda, opt.r_inner, stage, &trace);
    const RVec norms = f.group_norms(info.full_layout);
    const Real max_norm = norms.maxCoeff();
    Real min_active = std::numeric_limits<Real>::infinity();
    for (int g = 0; g < norms.size(); ++g)
      if (norms[g] >= opt.round_eps * max_norm)
        min_active = std::min(min_active, norms[g]);
    if (lambda * min_active > opt.lambda_stop) break;
    lambda *= opt.nu;
  }

  const RVec norms = f.group_norms(info.full_layout);
  const Real max_norm = norms.maxCoeff();
  SelectionMask mask(info.full_layout.n_groups, false);
  int arg_max = 0;
  for (int g = 0; g < norms.size(); ++g) {
    if (norms[g] >= opt.round_eps * max_norm) mask.set(g, true);
    if (norms[g] > norms[arg_max]) arg_max = g;
  }
  if (mask.count() == 0) mask.set(arg_max, true);

  // Frozen-selection repair under the same scalarized objective.
  std::vector<int> act_rows = rows_of_mask(mask, info.full_layout);
  SelectionMask row_mask(s.n_tx, false);
  for (int r : act_rows) row_mask.set(r, true);
  Reduced red_fix = reduce_problem(cfg, h, act_rows);
  LoopSetup ls_fix = ls;
  ls_fix.red = &red_fix;
  ls_fix.relaxed = false;
  ls_fix.layout = (kind == PowerModelKind::PCEquivalent)
                      ? GroupLayout::grouped(static_cast<int>(act_rows.size()),
                                             mask.count())
                      : GroupLayout::per_row(static_cast<int>(act_rows.size()));
  ls_fix.fixed_circuit = fixed_circuit_power(s, kind, mask.count());

  PrecoderSet start = restrict_rows(expand_rows(f, rows, s.n_tx), act_rows);
  if (reduced_beam_slack(cfg, red_fix, start) < -1e-12) {
    const PrecoderSet init = feasible_initial_precoder(cfg, h, row_mask);
    if (init.mats.empty()) throw InfeasibleError("tradeoff repair infeasible");
    start = restrict_rows(init, act_rows);
  }
  const int cap = std::max(opt.r_inner * 3, 24);
  const PrecoderSet f_fix =
      run_inner_loop(ls_fix, std::move(start), 0.0, cap, opt.r_outer, &trace);

  TradeoffPoint pt;
  pt.omega1 = omega1;
  pt.omega2 = omega2;
  pt.feasible = true;
  pt.rate_bits = spectral_efficiency(red_fix.h, f_fix, s.n_streams, s.noise_var);
  pt.power = f_fix.total_tx_power() / s.eta_pa + ls_fix.fixed_circuit;
  pt.ee = pt.rate_bits / pt.power;
  pt.mask = mask;
  return pt;
}

}  // namespace isac
