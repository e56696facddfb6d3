#ifndef ISAC_HYBRID_FACTORIZATION_HPP
#define ISAC_HYBRID_FACTORIZATION_HPP

#include "isac/config.hpp"
#include "isac/types.hpp"

namespace isac {

/// Horizontal concatenation [F_1 | ... | F_Nsub]. One frequency-flat analog
/// matrix must serve every subcarrier, so factorizations target the stack.
CMat stack_precoders(const PrecoderSet& f);

/// Splits a stacked digital matrix back into per-subcarrier blocks.
std::vector<CMat> unstack_digital(const CMat& bb, int n_sub);

struct FactorizationOptions {
  int max_sweeps = 50;
  Real rel_tol = 1e-4;  // stop once a sweep improves the residual by less
};

struct FactorizationResult {
  HybridPrecoder precoder;
  Real residual = 0;               // vs the reference, final returned state
  Real residual_unnormalized = 0;  // vs the reference, before power scaling
  Real scale = 1.0;    // digital scaling applied by power normalization
  int sweeps = 0;
  bool gram_jittered = false;  // LS hit a rank-deficient Gram matrix
  std::vector<Real> residual_history;  // after every digital/analog update
};

/// Least-squares digital stage: F_bb = (F_rf^H F_rf)^-1 F_rf^H F_opt.
/// Falls back to a jittered Gram matrix when the factor is rank deficient;
/// `jittered` (when given) reports that the fallback fired.
CMat fc_digital_ls(const CMat& f_rf_active, const CMat& f_opt,
                   bool* jittered = nullptr);

/// Phase-only update of analog column q holding everything else fixed:
/// entries take the phase of (F_opt - sum_{p != q} f_p b_p) b_q^H. Entries
/// without a preferred phase keep their previous value.
void fc_analog_column_update(int q, CMat& f_rf, const CMat& f_bb,
                             const CMat& f_opt);

/// Factorizes a stacked fully-digital reference into n_active unit-modulus
/// analog columns (the first n_active chains) plus a digital stack by
/// alternating least-squares and per-column phase updates. The analog start
/// takes the phases of the leading left singular vectors of the reference.
FactorizationResult fc_match(const CMat& f_opt, int n_active,
                             const SystemConfig& sys,
                             const FactorizationOptions& opt = {});

/// Least-squares digital row for one subarray: (f^H f)^-1 f^H F_block, which
/// reduces to (n_rf/n_tx) f^H F_block for unit-modulus subarray vectors.
Eigen::RowVectorXcd pc_digital_row(const CVec& f_rf_i, const CMat& f_block);

/// Phase-only subarray vector update: phases of F_block * row^H.
CVec pc_analog_update(const CMat& f_block, const Eigen::RowVectorXcd& f_bb_row);

/// Factorizes a subarray-structured stacked reference into a block-diagonal
/// analog matrix and per-chain digital rows. Subarrays whose row group is
/// exactly zero are treated as deactivated and stay zero. Blocks are
/// independent and processed in ascending order.
FactorizationResult pc_match(const CMat& f_opt, const SystemConfig& sys,
                             const FactorizationOptions& opt = {});

/// Scales the digital matrices so the radiated power meets the budget when it
/// is exceeded; returns the applied scale (1 when already within budget).
Real power_normalize(HybridPrecoder& h, Real p_tx);

}  // namespace isac

#endif  // ISAC_HYBRID_FACTORIZATION_HPP
