#ifndef ISAC_CHANNEL_HPP
#define ISAC_CHANNEL_HPP

#include <cmath>
#include <vector>

#include "isac/config.hpp"
#include "isac/rng.hpp"
#include "isac/types.hpp"

namespace isac {

/// Uniform-linear-array response. Element n (0-based) has phase
/// -2*pi * eff_spacing_wl * n * sin(theta); eff_spacing_wl is the element
/// spacing in wavelengths at the evaluated frequency, so wideband squint is
/// expressed by scaling the carrier-referenced spacing with f/f_c.
inline CVec ula_steering(int n_elem, Real eff_spacing_wl, Real theta) {
  CVec a(n_elem);
  const Real step = -2.0 * 3.14159265358979323846 * eff_spacing_wl * std::sin(theta);
  for (int n = 0; n < n_elem; ++n) a[n] = std::polar(1.0, step * n);
  return a;
}

inline Real frequency_scaled_spacing(const SystemConfig& s, Real spacing_wl, int k) {
  return spacing_wl * s.subcarrier_freq(k) / s.carrier_hz;
}

inline CVec tx_steering(const SystemConfig& s, int k, Real theta) {
  return ula_steering(s.n_tx, frequency_scaled_spacing(s, s.tx_spacing_wl, k), theta);
}

inline CVec ue_rx_steering(const SystemConfig& s, int k, Real theta) {
  return ula_steering(s.n_rx, frequency_scaled_spacing(s, s.rx_spacing_wl, k), theta);
}

inline CVec sen_rx_steering(const SystemConfig& s, int k, Real theta) {
  return ula_steering(s.n_rx_sen,
                      frequency_scaled_spacing(s, s.sen_rx_spacing_wl, k), theta);
}

/// Frequency-domain downlink channels, one n_rx x n_tx matrix per user and
/// subcarrier.
struct ChannelSet {
  std::vector<std::vector<CMat>> h;  // [user][subcarrier]

  int n_users() const { return static_cast<int>(h.size()); }
  int n_sub() const { return h.empty() ? 0 : static_cast<int>(h[0].size()); }
  const CMat& at(int u, int k) const { return h[u][k]; }
};

/// Clustered geometric wideband channel. Each user gets n_clusters scattering
/// clusters with exponential delays and Gaussian ray offsets around a uniform
/// center direction; path gains are unit-variance complex normal scaled so
/// every channel entry has unit average power. Fully determined by the seed.
inline ChannelSet generate_channel(const SystemConfig& s, const ClusterParams& p,
                                   std::uint64_t seed, std::uint64_t trial = 0) {
  ChannelSet out;
  out.h.assign(s.n_users, std::vector<CMat>(s.n_sub, CMat::Zero(s.n_rx, s.n_tx)));
  const int n_paths = p.n_clusters * p.n_rays;
  const Real gain_scale = 1.0 / std::sqrt(static_cast<Real>(n_paths));
  for (int u = 0; u < s.n_users; ++u) {
    SplitRng rng(seed, stream::kChannel, trial, static_cast<std::uint64_t>(u));
    for (int c = 0; c < p.n_clusters; ++c) {
      const Real center_tx = rng.uniform(-p.angle_range_rad, p.angle_range_rad);
      const Real center_rx = rng.uniform(-p.angle_range_rad, p.angle_range_rad);
      Real delay = 0.0;
      if (p.delay_spread_s > 0) {
        double un = rng.uniform();
        while (un <= 0.0) un = rng.uniform();
        delay = -p.delay_spread_s * std::log(un);
      }
      for (int r = 0; r < p.n_rays; ++r) {
        const Real theta_tx = center_tx + p.angle_spread_rad * rng.gauss();
        const Real theta_rx = center_rx + p.angle_spread_rad * rng.gauss();
        const Complex g = rng.cgauss() * gain_scale;
        for (int k = 0; k < s.n_sub; ++k) {
          const Complex phase =
              std::polar(1.0, -2.0 * 3.14159265358979323846 *
                                  s.subcarrier_freq(k) * delay);
          out.h[u][k].noalias() +=
              (g * phase) * (ue_rx_steering(s, k, theta_rx) *
                             tx_steering(s, k, theta_tx).adjoint());
        }
      }
    }
  }
  return out;
}

}  // namespace isac

#endif  // ISAC_CHANNEL_HPP
