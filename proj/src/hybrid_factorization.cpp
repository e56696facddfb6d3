#include "isac/hybrid_factorization.hpp"

#include <cassert>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace isac {
namespace {

constexpr Real kGramRidge = 1e-12;

// Pivot ratio below which the Gram factorization counts as rank deficient.
// LDLT still reports success on an exactly singular Gram matrix (the rounding
// pivot is tiny but nonzero), so the solve would silently amplify noise.
constexpr Real kGramRcondFloor = 1e-12;

CMat phases_of(const CMat& m) {
  CMat out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const Complex v = m(i, j);
      out(i, j) = (std::abs(v) > 0) ? v / std::abs(v) : Complex(1, 0);
    }
  }
  return out;
}

Real stack_residual(const CMat& f_opt, const CMat& f_rf, const CMat& f_bb) {
  return (f_opt - f_rf * f_bb).norm();
}

/// ||F_opt - F_rf [F_bb,1 ... F_bb,K]||_F for the assembled precoder.
Real matching_error(const CMat& f_opt, const HybridPrecoder& h) {
  Real sq = 0;
  const Eigen::Index cols = f_opt.cols() / h.n_sub();
  for (int k = 0; k < h.n_sub(); ++k) {
    sq += (f_opt.middleCols(k * cols, cols) -
           h.analog * h.digital[static_cast<std::size_t>(k)])
              .squaredNorm();
  }
  return std::sqrt(sq);
}

void record_step(std::vector<Real>& history, Real value) {
  assert(history.empty() || value <= history.back() * (1 + 1e-9) + 1e-12);
  history.push_back(value);
}

}  // namespace

CMat stack_precoders(const PrecoderSet& f) {
  const int n_sub = f.n_sub();
  if (n_sub == 0) return {};
  const Eigen::Index rows = f.mats[0].rows();
  const Eigen::Index cols = f.mats[0].cols();
  CMat out(rows, cols * n_sub);
  for (int k = 0; k < n_sub; ++k) out.middleCols(k * cols, cols) = f.mats[k];
  return out;
}

std::vector<CMat> unstack_digital(const CMat& bb, int n_sub) {
  if (n_sub <= 0 || bb.cols() % n_sub != 0) {
    throw std::invalid_argument("stacked width is not a multiple of n_sub");
  }
  const Eigen::Index cols = bb.cols() / n_sub;
  std::vector<CMat> out;
  out.reserve(static_cast<std::size_t>(n_sub));
  for (int k = 0; k < n_sub; ++k) out.push_back(bb.middleCols(k * cols, cols));
  return out;
}

CMat fc_digital_ls(const CMat& f_rf_active, const CMat& f_opt, bool* jittered) {
  CMat gram = f_rf_active.adjoint() * f_rf_active;
  const CMat rhs = f_rf_active.adjoint() * f_opt;
  if (jittered != nullptr) *jittered = false;
  Eigen::LDLT<CMat> ldlt(gram);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    const RVec d = ldlt.vectorD().real();
    if (d.size() > 0 && d.minCoeff() > d.maxCoeff() * kGramRcondFloor) {
      CMat sol = ldlt.solve(rhs);
      if (sol.allFinite()) return sol;
    }
  }
  if (jittered != nullptr) *jittered = true;
  const Real ridge =
      kGramRidge * std::max<Real>(gram.real().trace() / gram.rows(), 1.0);
  gram += ridge * CMat::Identity(gram.rows(), gram.cols());
  return gram.ldlt().solve(rhs);
}

void fc_analog_column_update(int q, CMat& f_rf, const CMat& f_bb,
                             const CMat& f_opt) {
  // Residual with column q removed, then the best unit-modulus column in the
  // least-squares sense: each entry takes the phase of its correlation.
  CMat partial = f_opt - f_rf * f_bb;
  partial.noalias() += f_rf.col(q) * f_bb.row(q);
  const CVec fix = partial * f_bb.row(q).adjoint();
  for (Eigen::Index i = 0; i < f_rf.rows(); ++i) {
    const Real mag = std::abs(fix(i));
    if (mag > 0) f_rf(i, q) = fix(i) / mag;
  }
}

FactorizationResult fc_match(const CMat& f_opt, int n_active,
                             const SystemConfig& sys,
                             const FactorizationOptions& opt) {
  if (n_active < 1 || n_active > sys.n_rf) {
    throw std::invalid_argument("fc_match: n_active outside 1..n_rf");
  }
  if (f_opt.rows() != sys.n_tx ||
      f_opt.cols() != static_cast<Eigen::Index>(sys.n_cols()) * sys.n_sub) {
    throw std::invalid_argument("fc_match: reference shape mismatch");
  }

  Eigen::JacobiSVD<CMat> svd(f_opt, Eigen::ComputeThinU);
  const CMat u = svd.matrixU();

  FactorizationResult result;
  CMat analog = CMat::Ones(sys.n_tx, n_active);
  const Eigen::Index seeded = std::min<Eigen::Index>(n_active, u.cols());
  analog.leftCols(seeded) = phases_of(u.leftCols(seeded));

  CMat digital = fc_digital_ls(analog, f_opt, &result.gram_jittered);
  Real residual = stack_residual(f_opt, analog, digital);
  record_step(result.residual_history, residual);

  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    const Real before = residual;
    for (int q = 0; q < n_active; ++q) {
      fc_analog_column_update(q, analog, digital, f_opt);
      record_step(result.residual_history,
                  stack_residual(f_opt, analog, digital));
    }
    bool jittered = false;
    digital = fc_digital_ls(analog, f_opt, &jittered);
    result.gram_jittered = result.gram_jittered || jittered;
    residual = stack_residual(f_opt, analog, digital);
    record_step(result.residual_history, residual);
    result.sweeps = sweep + 1;
    if (before - residual < opt.rel_tol * std::max<Real>(before, 1e-30)) break;
  }

  HybridPrecoder h;
  h.architecture = Architecture::FC;
  h.mask = SelectionMask(sys.n_rf, false);
  for (int i = 0; i < n_active; ++i) h.mask.set(i, true);
  h.analog = CMat::Zero(sys.n_tx, sys.n_rf);
  h.analog.leftCols(n_active) = analog;
  h.digital.assign(static_cast<std::size_t>(sys.n_sub),
                   CMat::Zero(sys.n_rf, sys.n_cols()));
  const std::vector<CMat> blocks = unstack_digital(digital, sys.n_sub);
  for (int k = 0; k < sys.n_sub; ++k) {
    h.digital[static_cast<std::size_t>(k)].topRows(n_active) = blocks[k];
  }

  result.residual_unnormalized = residual;
  result.scale = power_normalize(h, sys.p_tx);
  result.residual = matching_error(f_opt, h);
  result.precoder = std::move(h);
  return result;
}

Eigen::RowVectorXcd pc_digital_row(const CVec& f_rf_i, const CMat& f_block) {
  const Real denom = f_rf_i.squaredNorm();
  if (denom <= 0) {
    throw std::invalid_argument("pc_digital_row: zero analog vector");
  }
  return (f_rf_i.adjoint() * f_block) / denom;
}

CVec pc_analog_update(const CMat& f_block, const Eigen::RowVectorXcd& f_bb_row) {
  const CVec fix = f_block * f_bb_row.adjoint();
  CVec out(fix.size());
  for (Eigen::Index i = 0; i < fix.size(); ++i) {
    const Real mag = std::abs(fix(i));
    out(i) = (mag > 0) ? fix(i) / mag : Complex(1, 0);
  }
  return out;
}

FactorizationResult pc_match(const CMat& f_opt, const SystemConfig& sys,
                             const FactorizationOptions& opt) {
  if (sys.n_tx % sys.n_rf != 0) {
    throw std::invalid_argument("pc_match: n_tx not divisible by n_rf");
  }
  const int group = sys.n_tx / sys.n_rf;
  if (f_opt.rows() != sys.n_tx ||
      f_opt.cols() != static_cast<Eigen::Index>(sys.n_cols()) * sys.n_sub) {
    throw std::invalid_argument("pc_match: reference shape mismatch");
  }

  FactorizationResult result;
  HybridPrecoder h;
  h.architecture = Architecture::PC;
  h.mask = SelectionMask(sys.n_rf, false);
  h.analog = CMat::Zero(sys.n_tx, sys.n_rf);
  CMat digital_stack = CMat::Zero(sys.n_rf, f_opt.cols());

  // The recorded history tracks the residual of the whole stack: blocks not
  // yet processed contribute their full norm (zero factors), so every seed,
  // phase, and least-squares update can only shrink it.
  Real global_sq = 0;
  for (int i = 0; i < sys.n_rf; ++i) {
    global_sq += f_opt.middleRows(i * group, group).squaredNorm();
  }
  const auto with_block = [&global_sq](Real old_contrib_sq, Real res) {
    return std::sqrt(std::max<Real>(global_sq - old_contrib_sq + res * res, 0));
  };

  Real residual_sq = 0;
  int max_sweeps_used = 0;
  for (int i = 0; i < sys.n_rf; ++i) {
    const CMat block = f_opt.middleRows(i * group, group);
    const Real block_sq = block.squaredNorm();
    if (block_sq == 0) continue;  // deactivated subarray stays zero
    h.mask.set(i, true);

    // The dominant left singular vector seeds the phases of this subarray.
    Eigen::JacobiSVD<CMat> svd(block, Eigen::ComputeThinU);
    CVec analog = phases_of(svd.matrixU().col(0));
    Eigen::RowVectorXcd row = pc_digital_row(analog, block);
    Real res = (block - analog * row).norm();
    record_step(result.residual_history, with_block(block_sq, res));

    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      const Real before = res;
      analog = pc_analog_update(block, row);
      record_step(result.residual_history,
                  with_block(block_sq, (block - analog * row).norm()));
      row = pc_digital_row(analog, block);
      res = (block - analog * row).norm();
      record_step(result.residual_history, with_block(block_sq, res));
      max_sweeps_used = std::max(max_sweeps_used, sweep + 1);
      if (before - res < opt.rel_tol * std::max<Real>(before, 1e-30)) break;
    }

    global_sq += res * res - block_sq;  // this block now sits at its final fit
    h.analog.col(i).segment(i * group, group) = analog;
    digital_stack.row(i) = row;
    residual_sq += res * res;
  }

  h.digital.assign(static_cast<std::size_t>(sys.n_sub),
                   CMat::Zero(sys.n_rf, sys.n_cols()));
  const std::vector<CMat> blocks = unstack_digital(digital_stack, sys.n_sub);
  for (int k = 0; k < sys.n_sub; ++k) {
    h.digital[static_cast<std::size_t>(k)] = blocks[k];
  }

  result.sweeps = max_sweeps_used;
  result.residual_unnormalized = std::sqrt(residual_sq);
  result.scale = power_normalize(h, sys.p_tx);
  result.residual = result.scale < 1 ? matching_error(f_opt, h)
                                     : result.residual_unnormalized;
  result.precoder = std::move(h);
  return result;
}

Real power_normalize(HybridPrecoder& h, Real p_tx) {
  const Real power = h.product_power();
  if (power <= p_tx || power <= 0) return 1.0;
  const Real scale = std::sqrt(p_tx / power);
  for (CMat& bb : h.digital) bb *= scale;
  return scale;
}

}  // namespace isac
