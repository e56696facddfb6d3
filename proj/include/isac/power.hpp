#ifndef ISAC_POWER_HPP
#define ISAC_POWER_HPP

#include <cmath>

#include "isac/config.hpp"
#include "isac/types.hpp"

namespace isac {

/// Transmit beam power ||F_k^H a||^2 radiated toward steering direction a.
template <typename DerivedF, typename DerivedA>
Real beam_power(const Eigen::MatrixBase<DerivedF>& precoder_k,
                const Eigen::MatrixBase<DerivedA>& steering) {
  return (precoder_k.adjoint() * steering).squaredNorm();
}

inline Real energy_efficiency(Real rate_bits, Real power_watts) {
  return rate_bits / power_watts;
}

/// Number of chain groups whose stacked rows carry any power.
inline int count_active_groups(const PrecoderSet& f, const GroupLayout& layout,
                               Real threshold = 0.0) {
  int n = 0;
  for (int g = 0; g < layout.n_groups; ++g)
    if (f.group_norm(layout, g) > threshold) ++n;
  return n;
}

/// Smooth stand-in for the active-group count: sum of tanh(lambda * norm)
/// over group norms. Approaches the exact count as lambda grows and never
/// exceeds it.
inline Real approx_active_groups(const PrecoderSet& f, const GroupLayout& layout,
                                 Real lambda) {
  Real s = 0;
  for (int g = 0; g < layout.n_groups; ++g)
    s += std::tanh(lambda * f.group_norm(layout, g));
  return s;
}

/// Chain-count circuit pricing for the selectable front ends: per-antenna
/// chains (one row per group) or per-subarray chains (row blocks).
struct ChainCosting {
  GroupLayout layout;
  Real cost_per_group = 0.0;
};

inline ChainCosting chain_costing_fd(const SystemConfig& s) {
  return {GroupLayout::per_row(s.n_tx), s.p_rf};
}

inline ChainCosting chain_costing_pc(const SystemConfig& s) {
  const GroupLayout layout = GroupLayout::grouped(s.n_tx, s.n_rf);
  return {layout, s.p_rf + layout.rows_per_group * s.p_ps};
}

/// Consumed power of the fully-digital transmitter: PA drain plus baseband
/// plus one RF chain per antenna with a nonzero precoder row.
inline Real total_power_fd(const PrecoderSet& f, const SystemConfig& s) {
  return f.total_tx_power() / s.eta_pa + s.p_bb +
         s.p_rf * count_active_groups(f, GroupLayout::per_row(s.n_tx));
}

/// total_power_fd with the chain count replaced by its tanh surrogate.
inline Real approx_total_power_fd(const PrecoderSet& f, const SystemConfig& s,
                                  Real lambda) {
  return f.total_tx_power() / s.eta_pa + s.p_bb +
         s.p_rf * approx_active_groups(f, GroupLayout::per_row(s.n_tx), lambda);
}

/// Consumed power of the fully-connected hybrid transmitter. Every active
/// chain feeds all n_tx phase shifters.
inline Real total_power_fc(const HybridPrecoder& h, const SystemConfig& s) {
  return h.product_power() / s.eta_pa + s.p_bb +
         (s.p_rf + s.n_tx * s.p_ps) * h.mask.count();
}

/// Consumed power of the partially-connected hybrid transmitter. Subarray
/// activity is read off the digital rows; each active chain feeds
/// n_tx/n_rf phase shifters, and the analog blocks are unit-modulus so the
/// radiated power is (n_tx/n_rf) times the digital power.
inline Real total_power_pc(const HybridPrecoder& h, const SystemConfig& s) {
  const int g = s.n_tx / s.n_rf;
  Real digital_power = 0;
  int n_active = 0;
  for (int j = 0; j < h.n_rf(); ++j) {
    Real row = 0;
    for (const auto& bb : h.digital) row += bb.row(j).squaredNorm();
    if (row > 0 && h.mask[j]) {
      ++n_active;
      digital_power += row;
    }
  }
  return g * digital_power / s.eta_pa + s.p_bb + (s.p_rf + g * s.p_ps) * n_active;
}

/// Power model of the subarray-equivalent fully-digital problem: exact PA
/// term, circuit cost per active row group.
inline Real total_power_pc_equivalent(const PrecoderSet& f, const SystemConfig& s) {
  const ChainCosting c = chain_costing_pc(s);
  return f.total_tx_power() / s.eta_pa + s.p_bb +
         c.cost_per_group * count_active_groups(f, c.layout);
}

inline Real approx_total_power_pc_equivalent(const PrecoderSet& f,
                                             const SystemConfig& s, Real lambda) {
  const ChainCosting c = chain_costing_pc(s);
  return f.total_tx_power() / s.eta_pa + s.p_bb +
         c.cost_per_group * approx_active_groups(f, c.layout, lambda);
}

}  // namespace isac

#endif  // ISAC_POWER_HPP
