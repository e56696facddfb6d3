#ifndef ISAC_CONFIG_HPP
#define ISAC_CONFIG_HPP

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "isac/types.hpp"

namespace isac {

/// Transmitter, OFDM, and power-model parameters shared by every module.
/// Powers are in watts, frequencies in Hz, angles in radians.
struct SystemConfig {
  int n_tx = 8;        // transmit antennas
  int n_rf = 8;        // RF chains available for selection
  int n_rx = 2;        // receive antennas per communication user
  int n_rx_sen = 16;   // sensing receive antennas
  int n_users = 2;
  int n_streams = 2;   // data streams per user
  int n_sub = 4;       // subcarriers
  int n_sym = 16;      // OFDM symbols per sensing frame
  int n_cp = 8;        // cyclic prefix length in samples

  double carrier_hz = 73e9;
  double spacing_hz = 240e3;       // subcarrier spacing
  double tx_spacing_wl = 0.5;      // element spacing in carrier wavelengths
  double rx_spacing_wl = 0.5;
  double sen_rx_spacing_wl = 0.5;

  double p_tx = 10.0;   // transmit power budget
  double p_rf = 0.3;    // per RF chain
  double p_bb = 0.2;    // baseband
  double p_ps = 0.05;   // per phase shifter
  double eta_pa = 1.0;  // PA efficiency in (0, 1]

  double noise_var = 1.0;      // communication noise variance
  double noise_var_sen = 1.0;  // sensing noise variance

  double p_th = 1.0;   // minimum beam power toward each sensing angle
  double p_fa = 1e-2;  // CFAR false-alarm probability

  std::vector<double> target_angles_rad;  // sensing constraint directions

  int n_cols() const { return n_streams * n_users; }
  double t_sym() const { return 1.0 / spacing_hz; }
  double t_cp() const { return n_cp * t_sym() / n_sub; }
  double t_tot() const { return t_sym() + t_cp(); }
  double delay_resolution() const { return 1.0 / (n_sub * spacing_hz); }
  double doppler_resolution() const { return 1.0 / (n_sym * t_tot()); }

  /// Subcarrier frequencies are centered on the carrier.
  double subcarrier_freq(int k) const {
    return carrier_hz + (k - 0.5 * (n_sub - 1)) * spacing_hz;
  }

  void validate() const;
};

/// Clustered geometric wideband channel parameters.
struct ClusterParams {
  int n_clusters = 5;
  int n_rays = 4;
  double angle_spread_rad = 0.07;   // ray offset std around the cluster center
  double angle_range_rad = 1.0472;  // cluster centers uniform in +-range
  double delay_spread_s = 50e-9;    // exponential cluster delay scale
};

/// One point target: azimuth, monostatic range, and radial velocity.
/// rcs_db is the target power over the sensing noise variance in dB.
struct Target {
  double angle_rad = 0.0;
  double range_m = 100.0;
  double velocity_mps = 0.0;
  double rcs_db = -15.0;
  double rcs_phase_rad = 0.0;

  double delay() const { return 2.0 * range_m / kSpeedOfLight; }
  double doppler(double carrier_hz) const {
    return 2.0 * velocity_mps * carrier_hz / kSpeedOfLight;
  }
  Complex gain(double noise_var_sen) const {
    const double amp = std::sqrt(noise_var_sen) * std::pow(10.0, rcs_db / 20.0);
    return std::polar(amp, rcs_phase_rad);
  }
};

using TargetScene = std::vector<Target>;

/// Uniform beam-scanning grid for the sensing receiver.
struct AngleGridSpec {
  double min_rad = -1.0472;
  double max_rad = 1.0472;
  double step_rad = 0.05236;

  std::vector<double> angles() const {
    std::vector<double> a;
    for (double t = min_rad; t <= max_rad + 1e-12; t += step_rad) a.push_back(t);
    return a;
  }
  int nearest_index(double angle) const {
    const double x = (angle - min_rad) / step_rad;
    int i = static_cast<int>(std::lround(x));
    const int n = static_cast<int>(angles().size());
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return i;
  }
};

/// Cell-averaging CFAR window shape: a 2-D cross with n_train training and
/// n_guard guard cells per side on each axis, wrapping on the periodic map.
struct CfarParams {
  int n_train = 8;
  int n_guard = 2;
};

/// Knobs of the selection-and-precoding solver.
struct OptimizerOptions {
  double lambda0 = 1.0;      // initial sharpness of the chain-activity surrogate
  double nu = 4.0;           // annealing factor per outer iteration
  int r_outer = 12;          // outer (annealing) iteration cap
  int r_inner = 15;          // inner iterations per annealing stage
  double tol_obj = 1e-5;     // relative objective stall tolerance, inner loop
  double round_eps = 1e-2;   // row-norm rounding threshold, relative to max row
  double lambda_stop = 6.0;  // stop once lambda * min active row norm exceeds this
  double sub_tol = 1e-6;     // relative tolerance of the convex subproblem
  int sub_iters = 400;       // gradient iteration cap of the convex subproblem
};

/// Everything a simulation run needs, loadable from one JSON file.
struct SimConfig {
  SystemConfig sys;
  ClusterParams channel;
  TargetScene scene;
  AngleGridSpec grid;
  CfarParams cfar;
  OptimizerOptions opt;

  void validate() const;
};

/// Named parameter presets ("setup1", "setup2"). The returned config is the
/// fully-digital variant; apply_architecture() switches antenna/chain counts
/// and the target strength to the hybrid values.
SimConfig preset_config(const std::string& name);

/// Adjusts n_tx/n_rf (and target strength where the presets differ by
/// architecture) for the requested front end. n_rf_override, if positive,
/// replaces the preset chain count.
void apply_architecture(SimConfig& cfg, Architecture arch, int n_rf_override = -1,
                        const std::string& preset_name = "");

SimConfig load_config(const std::string& path);
void save_config(const SimConfig& cfg, const std::string& path);
std::string config_to_json(const SimConfig& cfg);
SimConfig config_from_json(const std::string& text);

}  // namespace isac

#endif  // ISAC_CONFIG_HPP
