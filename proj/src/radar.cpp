#include "isac/radar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "isac/channel.hpp"
#include "json.hpp"

namespace isac {
namespace {

constexpr Real kTwoPi = 6.28318530717958647692528676655900577;
constexpr Real kDividerGuard = 1e-9;  // |D| below this times |x| is unusable

Complex unit_phasor(Real angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace

SymbolGrid draw_symbols(const SystemConfig& sys, SplitRng& rng) {
  SymbolGrid g;
  g.x.assign(static_cast<std::size_t>(sys.n_sub), {});
  for (int k = 0; k < sys.n_sub; ++k) {
    auto& col = g.x[static_cast<std::size_t>(k)];
    col.resize(static_cast<std::size_t>(sys.n_sym));
    for (int l = 0; l < sys.n_sym; ++l) {
      CVec x(sys.n_cols());
      for (int i = 0; i < sys.n_cols(); ++i) x(i) = rng.qam64();
      col[static_cast<std::size_t>(l)] = std::move(x);
    }
  }
  return g;
}

ReceivedGrid synthesize_rx(const SystemConfig& sys, const PrecoderSet& f,
                           const SymbolGrid& symbols, const TargetScene& scene,
                           SplitRng& noise_rng, bool with_noise) {
  if (f.n_sub() != sys.n_sub || symbols.n_sub() != sys.n_sub ||
      symbols.n_sym() != sys.n_sym) {
    throw std::invalid_argument("synthesize_rx: grid shape mismatch");
  }
  const int n_rx = sys.n_rx_sen;
  ReceivedGrid rx;
  rx.y.assign(static_cast<std::size_t>(sys.n_sub), {});
  for (int k = 0; k < sys.n_sub; ++k) {
    rx.y[static_cast<std::size_t>(k)].assign(
        static_cast<std::size_t>(sys.n_sym), CVec::Zero(n_rx));
  }

  const Real t_tot = sys.t_tot();
  for (const Target& t : scene) {
    const Complex beta = t.gain(sys.noise_var_sen);
    const Real tau = t.delay();
    const Real doppler = t.doppler(sys.carrier_hz);
    for (int k = 0; k < sys.n_sub; ++k) {
      const CVec a_rx = sen_rx_steering(sys, k, t.angle_rad);
      const CVec a_tx = tx_steering(sys, k, t.angle_rad);
      const Eigen::RowVectorXcd tx_row = a_tx.adjoint() * f.mats[k];
      const Complex delay_ramp = unit_phasor(-kTwoPi * k * sys.spacing_hz * tau);
      for (int l = 0; l < sys.n_sym; ++l) {
        const Complex doppler_ramp = unit_phasor(kTwoPi * doppler * l * t_tot);
        const Complex d = tx_row * symbols.x[k][static_cast<std::size_t>(l)];
        rx.y[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]
            .noalias() += (beta * delay_ramp * doppler_ramp * d) * a_rx;
      }
    }
  }

  if (with_noise) {
    for (int k = 0; k < sys.n_sub; ++k) {
      for (int l = 0; l < sys.n_sym; ++l) {
        CVec& y = rx.y[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
        for (int i = 0; i < n_rx; ++i) y(i) += noise_rng.cgauss(sys.noise_var_sen);
      }
    }
  }
  return rx;
}

DividedGrid beamform_and_divide(const SystemConfig& sys, const ReceivedGrid& rx,
                                const PrecoderSet& f, const SymbolGrid& symbols,
                                Real theta_m) {
  DividedGrid out;
  out.z = CMat::Zero(sys.n_sub, sys.n_sym);
  out.excluded.assign(static_cast<std::size_t>(sys.n_sub * sys.n_sym), 0);

  CMat beamformed(sys.n_sub, sys.n_sym);
  CMat dividers(sys.n_sub, sys.n_sym);
  Real ratio_sum = 0;   // sum |y~ / D|^2 over kept cells
  Real power_sum = 0;   // sum |y~|^2 over kept cells
  for (int k = 0; k < sys.n_sub; ++k) {
    const CVec a_rx = sen_rx_steering(sys, k, theta_m);
    const CVec a_tx = tx_steering(sys, k, theta_m);
    const Eigen::RowVectorXcd tx_row = a_tx.adjoint() * f.mats[k];
    for (int l = 0; l < sys.n_sym; ++l) {
      const CVec& x = symbols.x[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
      const Complex y_bf =
          a_rx.dot(rx.y[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]);
      const Complex d = tx_row * x;
      beamformed(k, l) = y_bf;
      dividers(k, l) = d;
      if (std::abs(d) < kDividerGuard * x.norm()) {
        out.excluded[static_cast<std::size_t>(k * sys.n_sym + l)] = 1;
        ++out.n_excluded;
        continue;
      }
      const Real r = std::norm(y_bf) / std::norm(d);
      ratio_sum += r;
      power_sum += std::norm(y_bf);
      out.sum_inv_d_sq += 1.0 / std::norm(d);
    }
  }

  out.alpha = (ratio_sum > 0 && power_sum > 0) ? std::sqrt(ratio_sum / power_sum)
                                               : 1.0;
  for (int k = 0; k < sys.n_sub; ++k) {
    for (int l = 0; l < sys.n_sym; ++l) {
      if (out.excluded[static_cast<std::size_t>(k * sys.n_sym + l)]) continue;
      out.z(k, l) = beamformed(k, l) / (out.alpha * dividers(k, l));
    }
  }
  return out;
}

CMat rd_transform(const CMat& z) {
  const int k_n = static_cast<int>(z.rows());
  const int l_n = static_cast<int>(z.cols());
  CMat delay_dft(k_n, k_n);
  for (int kp = 0; kp < k_n; ++kp) {
    for (int k = 0; k < k_n; ++k) {
      delay_dft(kp, k) = unit_phasor(kTwoPi * kp * k / k_n);
    }
  }
  CMat doppler_dft(l_n, l_n);
  for (int l = 0; l < l_n; ++l) {
    for (int lp = 0; lp < l_n; ++lp) {
      doppler_dft(l, lp) = unit_phasor(-kTwoPi * lp * l / l_n);
    }
  }
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(k_n) * l_n);
  return scale * delay_dft * z * doppler_dft;
}

Real predict_rd_noise_var(const SystemConfig& sys, const PrecoderSet& f,
                          Real theta_m, Real alpha, const SymbolGrid* symbols) {
  const Real cells = static_cast<Real>(sys.n_sub) * sys.n_sym;
  Real sum_inv = 0;
  if (symbols != nullptr) {
    for (int k = 0; k < sys.n_sub; ++k) {
      const CVec a_tx = tx_steering(sys, k, theta_m);
      const Eigen::RowVectorXcd tx_row = a_tx.adjoint() * f.mats[k];
      for (int l = 0; l < sys.n_sym; ++l) {
        const CVec& x =
            symbols->x[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
        const Complex d = tx_row * x;
        if (std::abs(d) < kDividerGuard * x.norm()) continue;
        sum_inv += 1.0 / std::norm(d);
      }
    }
  } else {
    for (int k = 0; k < sys.n_sub; ++k) {
      const CVec a_tx = tx_steering(sys, k, theta_m);
      const Real beam = (f.mats[k].adjoint() * a_tx).squaredNorm();
      if (beam <= 0) continue;
      sum_inv += sys.n_sym / beam;
    }
  }
  return sys.n_rx_sen * sys.noise_var_sen * sum_inv / (alpha * alpha * cells);
}

RDMap make_rd_map(const SystemConfig& sys, const ReceivedGrid& rx,
                  const PrecoderSet& f, const SymbolGrid& symbols, Real theta_m) {
  const DividedGrid div = beamform_and_divide(sys, rx, f, symbols, theta_m);
  RDMap map;
  map.values = rd_transform(div.z);
  map.angle_rad = theta_m;
  map.alpha = div.alpha;
  const Real cells = static_cast<Real>(sys.n_sub) * sys.n_sym;
  map.predicted_noise_var = sys.n_rx_sen * sys.noise_var_sen * div.sum_inv_d_sq /
                            (div.alpha * div.alpha * cells);
  return map;
}

std::vector<std::pair<int, int>> cfar_training_offsets(int n_sub, int n_sym,
                                                       const CfarParams& p) {
  // Training cells fit only if guard + training stays within half the axis
  // (wrap-around would otherwise fold training cells onto the cell under test
  // or onto each other).
  const auto side = [&p](int n) {
    const int room = (n - 1) / 2 - p.n_guard;
    return std::max(0, std::min(p.n_train, room));
  };
  const int delay_side = side(n_sub);
  const int doppler_side = side(n_sym);
  std::vector<std::pair<int, int>> offsets;
  offsets.reserve(2 * static_cast<std::size_t>(delay_side + doppler_side));
  for (int d = p.n_guard + 1; d <= p.n_guard + delay_side; ++d) {
    offsets.emplace_back(d, 0);
    offsets.emplace_back(-d, 0);
  }
  for (int d = p.n_guard + 1; d <= p.n_guard + doppler_side; ++d) {
    offsets.emplace_back(0, d);
    offsets.emplace_back(0, -d);
  }
  return offsets;
}

Real cfar_threshold_factor(int n_train_cells, Real p_fa) {
  if (n_train_cells <= 0) {
    throw std::invalid_argument("cfar: no training cells fit the grid");
  }
  if (p_fa <= 0 || p_fa >= 1) {
    throw std::invalid_argument("cfar: p_fa must lie in (0, 1)");
  }
  const Real n = static_cast<Real>(n_train_cells);
  return n * (std::pow(p_fa, -1.0 / n) - 1.0);
}

std::vector<CfarDetection> ca_cfar_detect(const CMat& rd_values,
                                          const CfarParams& params, Real p_fa) {
  const int k_n = static_cast<int>(rd_values.rows());
  const int l_n = static_cast<int>(rd_values.cols());
  const auto offsets = cfar_training_offsets(k_n, l_n, params);
  const Real factor = cfar_threshold_factor(static_cast<int>(offsets.size()), p_fa);

  RMat power(k_n, l_n);
  for (int k = 0; k < k_n; ++k)
    for (int l = 0; l < l_n; ++l) power(k, l) = std::norm(rd_values(k, l));

  std::vector<CfarDetection> hits;
  for (int k = 0; k < k_n; ++k) {
    for (int l = 0; l < l_n; ++l) {
      Real acc = 0;
      for (const auto& [dk, dl] : offsets) {
        const int kk = ((k + dk) % k_n + k_n) % k_n;
        const int ll = ((l + dl) % l_n + l_n) % l_n;
        acc += power(kk, ll);
      }
      const Real threshold = factor * acc / static_cast<Real>(offsets.size());
      if (power(k, l) > threshold) {
        hits.push_back({k, l, power(k, l), threshold});
      }
    }
  }
  return hits;
}

std::pair<int, int> expected_bins(const SystemConfig& sys, const Target& t) {
  const auto wrap = [](long v, int n) {
    return static_cast<int>(((v % n) + n) % n);
  };
  const long delay_bin = std::lround(t.delay() / sys.delay_resolution());
  const long doppler_bin =
      std::lround(t.doppler(sys.carrier_hz) / sys.doppler_resolution());
  return {wrap(delay_bin, sys.n_sub), wrap(doppler_bin, sys.n_sym)};
}

TrialDetections detect_scene(const SimConfig& cfg, const PrecoderSet& f,
                             const TargetScene& scene, std::uint64_t seed,
                             std::uint64_t trial) {
  const SystemConfig& sys = cfg.sys;
  SplitRng sym_rng(seed, stream::kSymbol, trial);
  SplitRng noise_rng(seed, stream::kNoise, trial);
  const SymbolGrid symbols = draw_symbols(sys, sym_rng);
  const ReceivedGrid rx = synthesize_rx(sys, f, symbols, scene, noise_rng);

  const std::vector<Real> angles = cfg.grid.angles();
  const int n_angles = static_cast<int>(angles.size());
  const int k_n = sys.n_sub;
  const int l_n = sys.n_sym;

  TrialDetections out;
  for (int m = 0; m < n_angles; ++m) {
    const DividedGrid div = beamform_and_divide(sys, rx, f, symbols, angles[m]);
    const CMat rd = rd_transform(div.z);
    for (const CfarDetection& d : ca_cfar_detect(rd, cfg.cfar, sys.p_fa)) {
      out.raw.push_back({m, d.delay_bin, d.doppler_bin, d.power});
    }
  }

  // Keep the strongest response per delay/Doppler cell across angles; ties go
  // to the smaller angle index because raw detections arrive in angle order.
  std::map<std::pair<int, int>, Detection> best;
  for (const Detection& d : out.raw) {
    auto [it, inserted] = best.try_emplace({d.delay_bin, d.doppler_bin}, d);
    if (!inserted && d.power > it->second.power) it->second = d;
  }
  out.deduped.reserve(best.size());
  for (const auto& [cell, d] : best) out.deduped.push_back(d);

  // Cells within one bin of a target (angle, delay, and Doppler) are its
  // neighborhood; everything else counts as a noise cell for FA accounting.
  std::vector<std::uint8_t> near_target(
      static_cast<std::size_t>(n_angles * k_n * l_n), 0);
  out.target_hit.assign(scene.size(), 0);
  for (std::size_t t = 0; t < scene.size(); ++t) {
    const int m_star = cfg.grid.nearest_index(scene[t].angle_rad);
    const auto [k_star, l_star] = expected_bins(sys, scene[t]);
    for (int dm = -1; dm <= 1; ++dm) {
      const int m = m_star + dm;
      if (m < 0 || m >= n_angles) continue;
      for (int dk = -1; dk <= 1; ++dk) {
        const int k = ((k_star + dk) % k_n + k_n) % k_n;
        for (int dl = -1; dl <= 1; ++dl) {
          const int l = ((l_star + dl) % l_n + l_n) % l_n;
          near_target[static_cast<std::size_t>((m * k_n + k) * l_n + l)] = 1;
        }
      }
    }
    for (const Detection& d : out.deduped) {
      const int dk = std::abs(d.delay_bin - k_star);
      const int dl = std::abs(d.doppler_bin - l_star);
      const bool delay_ok = std::min(dk, k_n - dk) <= 1;
      const bool doppler_ok = std::min(dl, l_n - dl) <= 1;
      if (delay_ok && doppler_ok && std::abs(d.angle_idx - m_star) <= 1) {
        out.target_hit[t] = 1;
        break;
      }
    }
  }

  long marked = 0;
  for (const auto flag : near_target) marked += flag;
  out.n_noise_cells = static_cast<long>(n_angles) * k_n * l_n - marked;
  for (const Detection& d : out.raw) {
    const std::size_t cell =
        static_cast<std::size_t>((d.angle_idx * k_n + d.delay_bin) * l_n +
                                 d.doppler_bin);
    if (!near_target[cell]) ++out.n_false;
  }
  return out;
}

SenseSummary sense_monte_carlo(const SimConfig& cfg, const PrecoderSet& f,
                               std::uint64_t seed, int n_trials,
                               std::vector<TrialDetections>* detail) {
  SenseSummary s;
  s.n_trials = n_trials;
  s.p_d_defined = !cfg.scene.empty();
  long hits = 0;
  long hit_chances = 0;
  for (int trial = 0; trial < n_trials; ++trial) {
    TrialDetections t = detect_scene(cfg, f, cfg.scene, seed,
                                     static_cast<std::uint64_t>(trial));
    for (const auto h : t.target_hit) {
      hits += h;
      ++hit_chances;
    }
    s.n_false_alarms += t.n_false;
    s.n_noise_cells += t.n_noise_cells;
    if (detail != nullptr) detail->push_back(std::move(t));
  }
  s.p_d = hit_chances > 0 ? static_cast<Real>(hits) / hit_chances : 0.0;
  s.fa_rate = s.n_noise_cells > 0
                  ? static_cast<Real>(s.n_false_alarms) / s.n_noise_cells
                  : 0.0;
  return s;
}

void export_rd_map(const RDMap& map, const std::string& path_base) {
  const std::string bin_path = path_base + ".f64";
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + bin_path);
  for (Eigen::Index k = 0; k < map.values.rows(); ++k) {
    for (Eigen::Index l = 0; l < map.values.cols(); ++l) {
      const double re = map.values(k, l).real();
      const double im = map.values(k, l).imag();
      bin.write(reinterpret_cast<const char*>(&re), sizeof(re));
      bin.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
  }
  bin.close();

  nlohmann::json meta{
      {"schema_version", 1},
      {"dtype", "float64-le"},
      {"layout", "row-major delay bins x Doppler bins, interleaved re/im"},
      {"n_delay_bins", map.values.rows()},
      {"n_doppler_bins", map.values.cols()},
      {"angle_rad", map.angle_rad},
      {"alpha", map.alpha},
      {"predicted_noise_var", map.predicted_noise_var},
      {"data_file", bin_path.substr(bin_path.find_last_of('/') + 1)},
  };
  std::ofstream side(path_base + ".json");
  if (!side) throw std::runtime_error("cannot open " + path_base + ".json");
  side << meta.dump(2) << '\n';
}

}  // namespace isac
