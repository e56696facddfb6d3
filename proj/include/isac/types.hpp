#ifndef ISAC_TYPES_HPP
#define ISAC_TYPES_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace isac {

using Real = double;
using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr Real kSpeedOfLight = 299792458.0;

/// Rows of a stacked precoder are partitioned into contiguous groups that
/// share one RF chain (group size 1 for per-antenna chains).
struct GroupLayout {
  int n_groups = 0;
  int rows_per_group = 1;

  int n_rows() const { return n_groups * rows_per_group; }
  int first_row(int g) const { return g * rows_per_group; }

  static GroupLayout per_row(int n) { return {n, 1}; }
  static GroupLayout grouped(int n_rows, int n_groups) {
    if (n_groups <= 0 || n_rows % n_groups != 0)
      throw std::invalid_argument("GroupLayout: rows not divisible by groups");
    return {n_groups, n_rows / n_groups};
  }
};

/// Active/inactive flags for the RF chains (diagonal of the selection matrix).
struct SelectionMask {
  std::vector<std::uint8_t> active;

  SelectionMask() = default;
  explicit SelectionMask(int n, bool on = true) : active(n, on ? 1 : 0) {}

  int size() const { return static_cast<int>(active.size()); }
  bool operator[](int i) const { return active[i] != 0; }
  void set(int i, bool v) { active[i] = v ? 1 : 0; }
  int count() const {
    int c = 0;
    for (auto a : active) c += (a != 0);
    return c;
  }
  bool operator==(const SelectionMask& o) const { return active == o.active; }

  std::vector<int> active_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
      if (active[i]) idx.push_back(i);
    return idx;
  }
};

/// Per-subcarrier fully-digital precoders F_k, each n_tx x (n_streams*n_users),
/// with per-user column blocks.
struct PrecoderSet {
  std::vector<CMat> mats;

  PrecoderSet() = default;
  PrecoderSet(int n_sub, int n_tx, int n_cols)
      : mats(n_sub, CMat::Zero(n_tx, n_cols)) {}

  int n_sub() const { return static_cast<int>(mats.size()); }
  int n_tx() const { return mats.empty() ? 0 : static_cast<int>(mats[0].rows()); }
  int n_cols() const { return mats.empty() ? 0 : static_cast<int>(mats[0].cols()); }

  /// Column block of user u on subcarrier k (block width n_s).
  Eigen::Block<CMat> user_block(int k, int u, int n_s) {
    return mats[k].block(0, u * n_s, mats[k].rows(), n_s);
  }
  Eigen::Block<const CMat> user_block(int k, int u, int n_s) const {
    return mats[k].block(0, u * n_s, mats[k].rows(), n_s);
  }

  Real total_tx_power() const {
    Real p = 0;
    for (const auto& f : mats) p += f.squaredNorm();
    return p;
  }

  /// l2 norm of row i across the horizontal stack [F_1 ... F_Nsub].
  Real stacked_row_norm(int i) const {
    Real s = 0;
    for (const auto& f : mats) s += f.row(i).squaredNorm();
    return std::sqrt(s);
  }

  /// Frobenius norm of the rows of group g across the stack.
  Real group_norm(const GroupLayout& layout, int g) const {
    Real s = 0;
    for (const auto& f : mats)
      s += f.middleRows(layout.first_row(g), layout.rows_per_group).squaredNorm();
    return std::sqrt(s);
  }

  RVec group_norms(const GroupLayout& layout) const {
    RVec v(layout.n_groups);
    for (int g = 0; g < layout.n_groups; ++g) v[g] = group_norm(layout, g);
    return v;
  }

  void set_zero() {
    for (auto& f : mats) f.setZero();
  }
};

enum class Architecture { FD, FC, PC };

inline const char* to_string(Architecture a) {
  switch (a) {
    case Architecture::FD: return "fd";
    case Architecture::FC: return "fc";
    case Architecture::PC: return "pc";
  }
  return "?";
}

/// Analog/digital precoder pair with an explicit chain-selection mask.
/// FC: active analog columns are unit-modulus, inactive columns zero.
/// PC: analog is block diagonal (one subarray per chain), unit-modulus on
/// active blocks.
struct HybridPrecoder {
  CMat analog;                 // n_tx x n_rf
  std::vector<CMat> digital;   // per subcarrier, n_rf x (n_s*n_users)
  SelectionMask mask;
  Architecture architecture = Architecture::FC;

  int n_tx() const { return static_cast<int>(analog.rows()); }
  int n_rf() const { return static_cast<int>(analog.cols()); }
  int n_sub() const { return static_cast<int>(digital.size()); }

  /// Effective fully-digital precoder F_rf * A * F_bb,k per subcarrier.
  PrecoderSet effective_fd() const {
    PrecoderSet out;
    out.mats.reserve(digital.size());
    for (const auto& bb : digital) {
      CMat masked = bb;
      for (int j = 0; j < mask.size(); ++j)
        if (!mask[j]) masked.row(j).setZero();
      out.mats.push_back(analog * masked);
    }
    return out;
  }

  Real product_power() const {
    Real p = 0;
    for (const auto& bb : digital) {
      CMat masked = bb;
      for (int j = 0; j < mask.size(); ++j)
        if (!mask[j]) masked.row(j).setZero();
      p += (analog * masked).squaredNorm();
    }
    return p;
  }

  void validate() const;
};

inline void HybridPrecoder::validate() const {
  const Real tol = 1e-9;
  if (mask.size() != n_rf())
    throw std::invalid_argument("HybridPrecoder: mask/analog size mismatch");
  if (architecture == Architecture::FC) {
    for (int j = 0; j < n_rf(); ++j) {
      for (int i = 0; i < n_tx(); ++i) {
        const Real m = std::abs(analog(i, j));
        if (mask[j] ? std::abs(m - 1.0) > tol : m > tol)
          throw std::invalid_argument("HybridPrecoder: FC unit-modulus violated");
      }
    }
  } else if (architecture == Architecture::PC) {
    if (n_tx() % n_rf() != 0)
      throw std::invalid_argument("HybridPrecoder: PC requires n_tx % n_rf == 0");
    const int g = n_tx() / n_rf();
    for (int j = 0; j < n_rf(); ++j) {
      for (int i = 0; i < n_tx(); ++i) {
        const Real m = std::abs(analog(i, j));
        const bool in_block = (i >= j * g && i < (j + 1) * g);
        if (!in_block && m > tol)
          throw std::invalid_argument("HybridPrecoder: PC block structure violated");
        if (in_block && mask[j] && std::abs(m - 1.0) > tol)
          throw std::invalid_argument("HybridPrecoder: PC unit-modulus violated");
        if (in_block && !mask[j] && m > tol)
          throw std::invalid_argument("HybridPrecoder: inactive PC block nonzero");
      }
    }
  }
}

}  // namespace isac

#endif  // ISAC_TYPES_HPP
