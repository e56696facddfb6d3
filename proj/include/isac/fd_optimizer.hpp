#ifndef ISAC_FD_OPTIMIZER_HPP
#define ISAC_FD_OPTIMIZER_HPP

#include <stdexcept>
#include <vector>

#include "isac/comm_metrics.hpp"
#include "isac/config.hpp"
#include "isac/power.hpp"
#include "isac/types.hpp"

namespace isac {

/// Raised when no precoder can meet the sensing beam floor within the power
/// budget (for the requested chain selection).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Which transmitter the fully-digital design stands in for. This fixes the
/// circuit-power bookkeeping and what a selection mask means:
/// FD            - chains are antennas, mask has one entry per row.
/// FCEquivalent  - chains are a count only; all rows stay active and each
///                 active chain pays for n_tx phase shifters.
/// PCEquivalent  - chains are row subarrays of size n_tx/n_rf.
enum class PowerModelKind { FD, FCEquivalent, PCEquivalent };

/// Per-iteration log of the solver.
struct TraceRecord {
  int outer = 0;
  int inner = 0;
  Real lambda = 0;
  Real mu = 0;
  Real surrogate_obj = 0;  // 2*mu*sqrt(R) - mu^2 * relaxed power, at the new F
  Real rate_bits = 0;
  Real power_exact = 0;    // mask-priced circuit power
  Real power_relaxed = 0;  // tanh-priced circuit power
  Real ee = 0;
  Real min_group_norm = 0;
  Real max_group_norm = 0;
  Real beam_slack = 0;   // min_k,theta beam power - p_th
  Real power_slack = 0;  // p_tx - transmit power
};

struct OptimizerTrace {
  std::vector<TraceRecord> records;
};

struct DesignOutcome {
  bool feasible = false;
  PrecoderSet f;        // full-height precoders (inactive rows exactly zero)
  SelectionMask mask;   // rows (FD), chain count slots (FC), subarrays (PC)
  Real rate_bits = 0;
  Real power = 0;
  Real ee = 0;
  Real beam_slack = 0;
  OptimizerTrace trace;
};

/// Optimal auxiliary ratio variable of the energy-efficiency objective at a
/// fixed operating point: sqrt(rate) / consumed power.
inline Real optimal_mu(Real rate_bits, Real power_watts) {
  return std::sqrt(std::max(rate_bits, 0.0)) / power_watts;
}

/// First-order expansion of the tanh chain-activity surrogate around
/// reference group norms. Overestimates the surrogate everywhere (tanh is
/// concave on the nonnegative axis), which is what the descent step needs.
inline Real linearized_chain_count(const RVec& norms, const RVec& ref_norms,
                                   Real lambda) {
  Real s = 0;
  for (int g = 0; g < norms.size(); ++g) {
    const Real th = std::tanh(lambda * ref_norms[g]);
    s += th + lambda * (1.0 - th * th) * (norms[g] - ref_norms[g]);
  }
  return s;
}

/// Affine minorant of the beam power ||F_k^H a||^2 around F_ref:
/// ||F_ref^H a||^2 + 2 Re tr(F_ref^H a a^H (F - F_ref)). Any point satisfying
/// the linearized floor satisfies the true one.
inline Real linearized_beam_power(const CMat& f_k, const CMat& f_ref_k,
                                  const CVec& steering) {
  const CVec c = f_ref_k.adjoint() * steering;
  const Complex cross = (steering.adjoint() * f_k * c).value();
  return 2.0 * cross.real() - c.squaredNorm();
}

/// Convex inner problem solved at each iteration: concave quadratic rate
/// model (frozen receivers/weights), linearized chain-activity cost, affine
/// beam-power floors, and the transmit power ball.
struct SubproblemSpec {
  // rate(F) = (c0 + sum_k [2 Re<T_k, F_k> - <F_k, J_k F_k>]) / (n_sub ln 2)
  std::vector<CMat> j;
  std::vector<CMat> t;
  Real c0 = 0;
  int n_sub = 1;

  enum class Mode { QuadraticTransform, WeightedLinear, PowerMin };
  Mode mode = Mode::QuadraticTransform;
  Real mu = 0;
  Real omega1 = 0, omega2 = 0;

  Real inv_eta = 1.0;
  Real circuit_const = 0;  // fixed circuit power inside the objective
  GroupLayout layout{0, 1};
  RVec norm_coef;  // per-group slope of the linearized activity cost

  Real p_tx = 1.0;
  std::vector<int> halfspace_k;  // subcarrier each constraint acts on
  std::vector<CMat> halfspace_g;
  std::vector<Real> halfspace_b;

  Real tol = 1e-6;
  int max_iters = 400;
  PrecoderSet f_start;
};

struct SubproblemResult {
  PrecoderSet f;
  Real objective = 0;
  int iterations = 0;
};

/// Monotone accelerated projected-gradient solve of the inner problem. The
/// start point must satisfy the constraints; the returned objective is never
/// below the start value.
SubproblemResult solve_convex_subproblem(const SubproblemSpec& spec);

/// Joint chain selection and precoding: annealed smooth-activity relaxation,
/// quadratic-transform outer updates, rounding, and a fixed-selection repair
/// solve. Throws InfeasibleError when no feasible start exists.
DesignOutcome run_annealed_design(const SimConfig& cfg, const ChannelSet& h,
                       PowerModelKind kind = PowerModelKind::FD);

/// Energy-efficiency design with the chain selection frozen. Infeasible masks
/// are reported through DesignOutcome::feasible rather than an exception.
DesignOutcome design_precoder_given_selection(const SimConfig& cfg,
                                              const ChannelSet& h,
                                              const SelectionMask& mask,
                                              PowerModelKind kind);

/// One point of the rate/power scalarization omega1 * R - omega2 * P with the
/// same relaxation, rounding, and repair pipeline.
struct TradeoffPoint {
  Real omega1 = 1, omega2 = 0;
  bool feasible = false;
  Real rate_bits = 0;
  Real power = 0;
  Real ee = 0;
  SelectionMask mask;
};

TradeoffPoint run_tradeoff_point(const SimConfig& cfg, const ChannelSet& h,
                                 Real omega1, Real omega2,
                                 PowerModelKind kind = PowerModelKind::FD);

/// Feasible starting precoder: eigenmode transmission blended with unit
/// steering columns toward the sensing directions, bisected on the blend so
/// every subcarrier clears the beam floor. Rows outside the mask stay zero.
/// Returns an empty PrecoderSet when the mask cannot meet the floor.
PrecoderSet feasible_initial_precoder(const SimConfig& cfg, const ChannelSet& h,
                                      const SelectionMask& row_mask);

/// Exact minimum beam-power slack min_{k,theta} (||F_k^H a(f_k,theta)||^2 - p_th).
Real beam_power_slack(const SimConfig& cfg, const PrecoderSet& f);

}  // namespace isac

#endif  // ISAC_FD_OPTIMIZER_HPP
