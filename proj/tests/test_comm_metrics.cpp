#include <cmath>

#include "doctest.h"
#include "isac/comm_metrics.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

PrecoderSet random_precoder(SplitRng& rng, int n_sub, int n_tx, int n_cols,
                            double scale = 1.0) {
  PrecoderSet f(n_sub, n_tx, n_cols);
  for (auto& m : f.mats)
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.cgauss();
  return f;
}

ChannelSet random_channel(SplitRng& rng, int n_users, int n_sub, int n_rx,
                          int n_tx) {
  ChannelSet h;
  h.h.assign(n_users, std::vector<CMat>(n_sub, CMat(n_rx, n_tx)));
  for (auto& per_user : h.h)
    for (auto& m : per_user)
      for (int i = 0; i < n_rx; ++i)
        for (int j = 0; j < n_tx; ++j) m(i, j) = rng.cgauss();
  return h;
}

// Independent rate oracle: log2 det(I + R_in^{-1} G G^H) per user/subcarrier.
Real rate_oracle(const ChannelSet& h, const PrecoderSet& f, int n_s,
                 Real noise_var) {
  Real acc = 0;
  for (int u = 0; u < h.n_users(); ++u)
    for (int k = 0; k < h.n_sub(); ++k) {
      const CMat& hk = h.at(u, k);
      const int n_rx = static_cast<int>(hk.rows());
      CMat r_in = noise_var * CMat::Identity(n_rx, n_rx);
      const int n_users = static_cast<int>(f.mats[k].cols()) / n_s;
      for (int i = 0; i < n_users; ++i) {
        if (i == u) continue;
        const CMat g = hk * f.mats[k].middleCols(i * n_s, n_s);
        r_in += g * g.adjoint();
      }
      const CMat g = hk * f.mats[k].middleCols(u * n_s, n_s);
      const CMat m =
          CMat::Identity(n_rx, n_rx) + r_in.inverse() * (g * g.adjoint());
      acc += std::log(m.determinant().real()) / kLn2;
    }
  return acc / f.n_sub();
}

}  // namespace

TEST_CASE("interference covariance hand oracles") {
  // Single user: pure noise.
  CMat h1(2, 3);
  h1.setRandom();
  CMat f1 = CMat::Random(3, 2);
  const CMat r1 = interference_covariance(h1, f1, 0, 2, 1.7);
  CHECK((r1 - 1.7 * CMat::Identity(2, 2)).norm() == doctest::Approx(0.0));

  // Two single-stream users, scalar receiver: r = nv + |h f_other|^2.
  CMat h(1, 2);
  h << Complex(1, 0), Complex(0, 1);
  CMat f(2, 2);
  f << Complex(1, 0), Complex(1, 0), Complex(0, 0), Complex(1, 0);
  const CMat r = interference_covariance(h, f, 0, 1, 0.5);
  // h * f.col(1) = 1 + i -> |.|^2 = 2.
  CHECK(r(0, 0).real() == doctest::Approx(2.5));
  const CMat r_other = interference_covariance(h, f, 1, 1, 0.5);
  // h * f.col(0) = 1 -> 1.
  CHECK(r_other(0, 0).real() == doctest::Approx(1.5));
}

TEST_CASE("spectral efficiency agrees with an independent determinant route") {
  SplitRng rng(21, stream::kGeneric);
  for (int rep = 0; rep < 30; ++rep) {
    const int n_s = 1 + static_cast<int>(rng.uniform_index(2));
    const int n_users = 1 + static_cast<int>(rng.uniform_index(2));
    const int n_rx = n_s + static_cast<int>(rng.uniform_index(2));
    const int n_tx = n_users * n_s + 2;
    const int n_sub = 1 + static_cast<int>(rng.uniform_index(3));
    const ChannelSet h = random_channel(rng, n_users, n_sub, n_rx, n_tx);
    const PrecoderSet f = random_precoder(rng, n_sub, n_tx, n_users * n_s);
    const Real direct = spectral_efficiency(h, f, n_s, 1.3);
    const Real oracle = rate_oracle(h, f, n_s, 1.3);
    CHECK(direct == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("spectral efficiency sanity behaviors") {
  SplitRng rng(22, stream::kGeneric);
  const ChannelSet h = random_channel(rng, 2, 2, 2, 6);
  const PrecoderSet f = random_precoder(rng, 2, 6, 4);

  PrecoderSet zero(2, 6, 4);
  CHECK(spectral_efficiency(h, zero, 2, 1.0) == doctest::Approx(0.0));

  // More noise, less rate.
  CHECK(spectral_efficiency(h, f, 2, 2.0) < spectral_efficiency(h, f, 2, 1.0));

  // Boosting the other user's power can only hurt user 0 on every subcarrier.
  PrecoderSet louder = f;
  for (int k = 0; k < 2; ++k) {
    louder.user_block(k, 1, 2) *= 3.0;
    CHECK(spectral_efficiency_term(h.at(0, k), louder.mats[k], 0, 2, 1.0) <
          spectral_efficiency_term(h.at(0, k), f.mats[k], 0, 2, 1.0));
  }
}

TEST_CASE("scalar mse_matrix hand oracle") {
  CMat h(1, 1);
  h << Complex(2, 0);
  CMat f(1, 2);
  f << Complex(0.5, 0), Complex(0.25, 0);
  CMat u(1, 1);
  u << Complex(0.3, 0);
  // d = 1 - 0.3 * 2 * 0.5 = 0.7; e = 0.49 + nv * 0.09 + |0.3 * 2 * 0.25|^2.
  const CMat e = mse_matrix(h, f, u, 0, 1, 2.0);
  CHECK(e(0, 0).real() == doctest::Approx(0.49 + 0.18 + 0.0225));
}

TEST_CASE("closed-form receivers and weights are the surrogate maximizers") {
  SplitRng rng(23, stream::kGeneric);
  const int n_s = 2, n_users = 2, n_rx = 2, n_tx = 6, n_sub = 2;
  const ChannelSet h = random_channel(rng, n_users, n_sub, n_rx, n_tx);
  const PrecoderSet f = random_precoder(rng, n_sub, n_tx, n_users * n_s);
  const WmmseState st = optimal_receivers_and_weights(h, f, n_s, 1.0);

  // W is the inverse of the error covariance at the MMSE receiver.
  for (int u = 0; u < n_users; ++u)
    for (int k = 0; k < n_sub; ++k) {
      const CMat e = mse_matrix(h.at(u, k), f.mats[k], st.u[u][k], u, n_s, 1.0);
      CHECK((st.w[u][k] * e - CMat::Identity(n_s, n_s)).norm() < 1e-8);
    }

  // Perturbing any receiver or weight can only lower the surrogate.
  const Real at_opt = wmmse_rate(h, f, st, n_s, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    WmmseState bad = st;
    for (int u = 0; u < n_users; ++u)
      for (int k = 0; k < n_sub; ++k) {
        CMat du(n_rx, n_s), dw(n_s, n_s);
        for (int i = 0; i < du.size(); ++i) du.data()[i] = 0.2 * rng.cgauss();
        for (int i = 0; i < dw.size(); ++i) dw.data()[i] = 0.1 * rng.cgauss();
        bad.u[u][k] += du;
        bad.w[u][k] = hermitianized(bad.w[u][k] + dw * dw.adjoint());
      }
    CHECK(wmmse_rate(h, f, bad, n_s, 1.0) <= at_opt + 1e-9);
  }
}

TEST_CASE("surrogate equals the spectral efficiency at the closed-form point") {
  SplitRng rng(24, stream::kGeneric);
  for (int rep = 0; rep < 20; ++rep) {
    const int n_s = 1 + static_cast<int>(rng.uniform_index(2));
    const int n_users = 1 + static_cast<int>(rng.uniform_index(2));
    const int n_rx = n_s;
    const int n_tx = 2 * n_users * n_s;
    const int n_sub = 1 + static_cast<int>(rng.uniform_index(2));
    const ChannelSet h = random_channel(rng, n_users, n_sub, n_rx, n_tx);
    const PrecoderSet f = random_precoder(rng, n_sub, n_tx, n_users * n_s);
    const WmmseState st = optimal_receivers_and_weights(h, f, n_s, 0.8);
    const Real se = spectral_efficiency(h, f, n_s, 0.8);
    const Real sur = wmmse_rate(h, f, st, n_s, 0.8);
    CHECK(sur == doctest::Approx(se).epsilon(1e-10));
  }
}
