#ifndef ISAC_LINALG_HPP
#define ISAC_LINALG_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "isac/types.hpp"

namespace isac {

inline CMat hermitianized(const CMat& m) { return 0.5 * (m + m.adjoint()); }

/// log(det(M)) of a Hermitian positive-definite matrix via Cholesky.
/// A tiny trace-scaled ridge is added only if the factorization fails.
inline Real logdet_hermitian(const CMat& m) {
  CMat a = hermitianized(m);
  Eigen::LLT<CMat> llt(a);
  if (llt.info() != Eigen::Success) {
    const Real ridge = 1e-12 * std::max(1.0, std::abs(a.trace().real()));
    a += ridge * CMat::Identity(a.rows(), a.cols());
    llt.compute(a);
  }
  Real s = 0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i).real());
  return 2.0 * s;
}

/// Solves A X = B for Hermitian positive-(semi)definite A, falling back to a
/// trace-scaled ridge when A is numerically singular.
inline CMat hermitian_solve(const CMat& a_in, const CMat& b) {
  CMat a = hermitianized(a_in);
  Eigen::LDLT<CMat> ldlt(a);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    CMat x = ldlt.solve(b);
    if (x.allFinite()) return x;
  }
  const Real ridge = 1e-12 * std::max(1.0, std::abs(a.trace().real()));
  a += ridge * CMat::Identity(a.rows(), a.cols());
  return a.ldlt().solve(b);
}

inline CMat hermitian_inverse(const CMat& a) {
  return hermitian_solve(a, CMat::Identity(a.rows(), a.cols()));
}

}  // namespace isac

#endif  // ISAC_LINALG_HPP
