#ifndef ISAC_RADAR_HPP
#define ISAC_RADAR_HPP

#include <string>
#include <vector>

#include "isac/config.hpp"
#include "isac/rng.hpp"
#include "isac/types.hpp"

namespace isac {

/// Transmitted data symbols x_{k,l} (stacked user streams) over one frame.
struct SymbolGrid {
  std::vector<std::vector<CVec>> x;  // [subcarrier][symbol] -> n_cols vector

  int n_sub() const { return static_cast<int>(x.size()); }
  int n_sym() const { return x.empty() ? 0 : static_cast<int>(x[0].size()); }
};

/// Echo snapshots at the sensing array, one vector per resource element.
struct ReceivedGrid {
  std::vector<std::vector<CVec>> y;  // [subcarrier][symbol] -> n_rx_sen vector
};

/// Beamformed, symbol-divided grid for one steering angle, ready for the
/// range-Doppler transform.
struct DividedGrid {
  CMat z;           // n_sub x n_sym
  Real alpha = 1;   // power-preserving normalizer
  Real sum_inv_d_sq = 0;         // sum over kept cells of 1/|D|^2
  std::vector<std::uint8_t> excluded;  // row-major k*n_sym+l, 1 = divider too small
  int n_excluded = 0;
};

/// Range-Doppler map for one steering angle.
struct RDMap {
  CMat values;  // n_sub x n_sym, delay bin x Doppler bin
  Real angle_rad = 0;
  Real alpha = 1;
  Real predicted_noise_var = 0;  // per-cell E|Z|^2 under noise only
};

struct CfarDetection {
  int delay_bin = 0;
  int doppler_bin = 0;
  Real power = 0;
  Real threshold = 0;
};

/// Detection attributed to a steering angle after map-level CFAR.
struct Detection {
  int angle_idx = 0;
  int delay_bin = 0;
  int doppler_bin = 0;
  Real power = 0;
};

struct TrialDetections {
  std::vector<Detection> raw;      // every CFAR crossing across all maps
  std::vector<Detection> deduped;  // one detection per (delay, Doppler) cell
  std::vector<std::uint8_t> target_hit;  // per scene target
  long n_false = 0;        // raw detections on noise cells
  long n_noise_cells = 0;  // cells outside every target neighborhood
};

struct SenseSummary {
  int n_trials = 0;
  bool p_d_defined = false;
  Real p_d = 0;        // mean hit rate over targets and trials
  Real fa_rate = 0;    // false alarms per noise cell
  long n_noise_cells = 0;
  long n_false_alarms = 0;
};

/// Draws one frame of unit-energy 64-QAM symbols for every resource element.
SymbolGrid draw_symbols(const SystemConfig& sys, SplitRng& rng);

/// Simulates the sensing-array echo of the transmitted frame: each target
/// contributes its array response, delay ramp across subcarriers, and Doppler
/// ramp across symbols; noise is optional so on-grid peak tests stay exact.
ReceivedGrid synthesize_rx(const SystemConfig& sys, const PrecoderSet& f,
                           const SymbolGrid& symbols, const TargetScene& scene,
                           SplitRng& noise_rng, bool with_noise = true);

/// Steers the received grid toward theta_m and divides out the known
/// transmitted scalar D = a_t^H F_k x. Cells whose divider is tiny relative
/// to the symbol magnitude are excluded from the map and the normalizer.
DividedGrid beamform_and_divide(const SystemConfig& sys, const ReceivedGrid& rx,
                                const PrecoderSet& f, const SymbolGrid& symbols,
                                Real theta_m);

/// Unitary 2-D transform onto the delay/Doppler grid (Parseval holds exactly).
CMat rd_transform(const CMat& z);

/// Per-cell noise power of the RD map. With symbols, uses the realized
/// dividers; without, approximates each |D|^-2 column sum by n_sym over the
/// beam power toward theta_m.
Real predict_rd_noise_var(const SystemConfig& sys, const PrecoderSet& f,
                          Real theta_m, Real alpha,
                          const SymbolGrid* symbols = nullptr);

/// Convenience: beamform, divide, transform, and attach the prediction.
RDMap make_rd_map(const SystemConfig& sys, const ReceivedGrid& rx,
                  const PrecoderSet& f, const SymbolGrid& symbols, Real theta_m);

/// Training-cell offsets of the cross-shaped CFAR window, clamped per axis so
/// guard and training cells always fit the wrapped grid without overlap.
std::vector<std::pair<int, int>> cfar_training_offsets(int n_sub, int n_sym,
                                                       const CfarParams& p);

/// Scale factor on the averaged training power for a target false-alarm rate.
Real cfar_threshold_factor(int n_train_cells, Real p_fa);

/// Cell-averaging CFAR over the RD power map with wrap-around training cells.
std::vector<CfarDetection> ca_cfar_detect(const CMat& rd_values,
                                          const CfarParams& params, Real p_fa);

/// Expected (delay, Doppler) bin of a target, wrapped onto the grid.
std::pair<int, int> expected_bins(const SystemConfig& sys, const Target& t);

/// Runs the full per-trial pipeline: every steering angle, CFAR per map,
/// cross-angle dedup (keep the strongest per delay/Doppler cell), then hit
/// and false-alarm attribution against the ground-truth scene.
TrialDetections detect_scene(const SimConfig& cfg, const PrecoderSet& f,
                             const TargetScene& scene, std::uint64_t seed,
                             std::uint64_t trial);

/// Monte-Carlo wrapper around detect_scene; optionally keeps per-trial detail.
SenseSummary sense_monte_carlo(const SimConfig& cfg, const PrecoderSet& f,
                               std::uint64_t seed, int n_trials,
                               std::vector<TrialDetections>* detail = nullptr);

/// Writes <path_base>.f64 (row-major delay-major interleaved re/im doubles,
/// little endian) plus a <path_base>.json sidecar describing the layout.
void export_rd_map(const RDMap& map, const std::string& path_base);

}  // namespace isac

#endif  // ISAC_RADAR_HPP
