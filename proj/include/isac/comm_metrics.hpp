#ifndef ISAC_COMM_METRICS_HPP
#define ISAC_COMM_METRICS_HPP

#include <cmath>
#include <vector>

#include "isac/channel.hpp"
#include "isac/linalg.hpp"
#include "isac/types.hpp"

namespace isac {

inline constexpr Real kLn2 = 0.69314718055994530941723212145818;

/// Received covariance of everything user u does not want on subcarrier k:
/// other users' streams plus thermal noise.
inline CMat interference_covariance(const CMat& h_ku, const CMat& f_k, int u,
                                    int n_s, Real noise_var) {
  const int n_rx = static_cast<int>(h_ku.rows());
  CMat r = noise_var * CMat::Identity(n_rx, n_rx);
  const int n_users = static_cast<int>(f_k.cols()) / n_s;
  for (int i = 0; i < n_users; ++i) {
    if (i == u) continue;
    const CMat g = h_ku * f_k.middleCols(i * n_s, n_s);
    r.noalias() += g * g.adjoint();
  }
  return r;
}

/// Achievable rate of user u on subcarrier k in bits (Gaussian signaling,
/// interference treated as noise).
inline Real spectral_efficiency_term(const CMat& h_ku, const CMat& f_k, int u,
                                     int n_s, Real noise_var) {
  const CMat r_in = interference_covariance(h_ku, f_k, u, n_s, noise_var);
  const CMat g = h_ku * f_k.middleCols(u * n_s, n_s);
  const CMat r_tot = r_in + g * g.adjoint();
  return (logdet_hermitian(r_tot) - logdet_hermitian(r_in)) / kLn2;
}

/// Sum spectral efficiency in bits/s/Hz, averaged over subcarriers.
inline Real spectral_efficiency(const ChannelSet& h, const PrecoderSet& f, int n_s,
                                Real noise_var) {
  Real acc = 0;
  for (int u = 0; u < h.n_users(); ++u)
    for (int k = 0; k < h.n_sub(); ++k)
      acc += spectral_efficiency_term(h.at(u, k), f.mats[k], u, n_s, noise_var);
  return acc / f.n_sub();
}

/// Stream error covariance of user u under linear receiver U:
/// E = (I - U^H H F_u)(I - U^H H F_u)^H + sum_{i!=u} U^H H F_i F_i^H H^H U
///     + noise_var * U^H U.
inline CMat mse_matrix(const CMat& h_ku, const CMat& f_k, const CMat& u_ku, int u,
                       int n_s, Real noise_var) {
  const CMat d = CMat::Identity(n_s, n_s) - u_ku.adjoint() * h_ku *
                                                f_k.middleCols(u * n_s, n_s);
  CMat e = d * d.adjoint() + noise_var * (u_ku.adjoint() * u_ku);
  const int n_users = static_cast<int>(f_k.cols()) / n_s;
  for (int i = 0; i < n_users; ++i) {
    if (i == u) continue;
    const CMat g = u_ku.adjoint() * (h_ku * f_k.middleCols(i * n_s, n_s));
    e.noalias() += g * g.adjoint();
  }
  return e;
}

/// Per-user, per-subcarrier auxiliary variables of the weighted-MMSE rate
/// surrogate.
struct WmmseState {
  std::vector<std::vector<CMat>> u;  // [user][subcarrier], n_rx x n_s
  std::vector<std::vector<CMat>> w;  // [user][subcarrier], n_s x n_s

  static WmmseState sized(int n_users, int n_sub, int n_rx, int n_s) {
    WmmseState st;
    st.u.assign(n_users, std::vector<CMat>(n_sub, CMat::Zero(n_rx, n_s)));
    st.w.assign(n_users, std::vector<CMat>(n_sub, CMat::Identity(n_s, n_s)));
    return st;
  }
};

/// Closed-form maximizers of the rate surrogate at fixed precoders: MMSE
/// receivers and inverse-MSE weights.
inline WmmseState optimal_receivers_and_weights(const ChannelSet& h,
                                                const PrecoderSet& f, int n_s,
                                                Real noise_var) {
  const int n_users = h.n_users();
  const int n_sub = h.n_sub();
  const int n_rx = static_cast<int>(h.at(0, 0).rows());
  WmmseState st = WmmseState::sized(n_users, n_sub, n_rx, n_s);
  for (int u = 0; u < n_users; ++u) {
    for (int k = 0; k < n_sub; ++k) {
      const CMat& hk = h.at(u, k);
      CMat cov = noise_var * CMat::Identity(n_rx, n_rx);
      for (int i = 0; i < n_users; ++i) {
        const CMat g = hk * f.mats[k].middleCols(i * n_s, n_s);
        cov.noalias() += g * g.adjoint();
      }
      const CMat g_u = hk * f.mats[k].middleCols(u * n_s, n_s);
      st.u[u][k] = hermitian_solve(cov, g_u);
      const CMat e = mse_matrix(hk, f.mats[k], st.u[u][k], u, n_s, noise_var);
      st.w[u][k] = hermitianized(hermitian_inverse(e));
    }
  }
  return st;
}

/// Value of the rate surrogate log|W| - tr(W E) + n_s, summed over users and
/// subcarriers and reported in bits to match spectral_efficiency. Equals the
/// spectral efficiency when (U, W) are the closed-form maximizers.
inline Real wmmse_rate(const ChannelSet& h, const PrecoderSet& f,
                       const WmmseState& st, int n_s, Real noise_var) {
  Real acc = 0;
  for (int u = 0; u < h.n_users(); ++u) {
    for (int k = 0; k < h.n_sub(); ++k) {
      const CMat e = mse_matrix(h.at(u, k), f.mats[k], st.u[u][k], u, n_s, noise_var);
      acc += logdet_hermitian(st.w[u][k]) - (st.w[u][k] * e).trace().real() + n_s;
    }
  }
  return acc / (f.n_sub() * kLn2);
}

}  // namespace isac

#endif  // ISAC_COMM_METRICS_HPP
