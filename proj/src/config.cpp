#include "isac/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace isac {

namespace {
constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("config: " + msg);
}
}  // namespace

void SystemConfig::validate() const {
  require(n_tx >= 1 && n_rf >= 1 && n_rf <= n_tx, "need 1 <= n_rf <= n_tx");
  require(n_rx >= 1 && n_rx_sen >= 1, "receive array sizes must be positive");
  require(n_users >= 1 && n_streams >= 1, "users and streams must be positive");
  require(n_streams <= n_rx, "streams per user cannot exceed user antennas");
  require(n_cols() <= n_tx, "total streams cannot exceed transmit antennas");
  require(n_sub >= 1 && n_sym >= 1 && n_cp >= 0, "bad OFDM grid");
  require(carrier_hz > 0 && spacing_hz > 0, "bad frequencies");
  require(tx_spacing_wl > 0 && rx_spacing_wl > 0 && sen_rx_spacing_wl > 0,
          "bad element spacing");
  require(p_tx > 0, "transmit power must be positive");
  require(p_rf >= 0 && p_bb >= 0 && p_ps >= 0, "circuit powers must be nonnegative");
  require(eta_pa > 0 && eta_pa <= 1.0, "PA efficiency must be in (0, 1]");
  require(noise_var > 0 && noise_var_sen > 0, "noise variances must be positive");
  require(p_th >= 0, "beam power floor must be nonnegative");
  require(p_fa > 0 && p_fa < 1, "false-alarm rate must be in (0, 1)");
  for (double t : target_angles_rad)
    require(std::abs(t) < kPi / 2, "sensing angles must be inside (-pi/2, pi/2)");
}

void SimConfig::validate() const {
  sys.validate();
  require(channel.n_clusters >= 1 && channel.n_rays >= 1, "bad cluster counts");
  require(channel.angle_spread_rad >= 0 && channel.delay_spread_s >= 0,
          "bad channel spreads");
  require(grid.step_rad > 0 && grid.max_rad > grid.min_rad, "bad angle grid");
  require(cfar.n_train >= 1 && cfar.n_guard >= 0, "bad CFAR window");
  require(opt.lambda0 > 0 && opt.nu > 1.0, "bad annealing schedule");
  require(opt.r_outer >= 1 && opt.r_inner >= 1, "bad iteration caps");
  require(opt.round_eps > 0 && opt.round_eps < 1, "bad rounding threshold");
  require(opt.sub_tol > 0 && opt.sub_iters >= 1, "bad subproblem settings");
  for (const auto& t : scene) {
    require(std::abs(t.angle_rad) < kPi / 2, "target angle outside (-pi/2, pi/2)");
    require(t.range_m > 0, "target range must be positive");
    // One unambiguous span in delay and Doppler so on-grid targets stay
    // detectable on the periodic range-Doppler map.
    require(t.delay() < sys.t_sym(), "target delay exceeds the unambiguous span");
    require(std::abs(t.doppler(sys.carrier_hz)) <
                0.5 * sys.n_sym * sys.doppler_resolution(),
            "target Doppler exceeds the unambiguous span");
  }
}

SimConfig preset_config(const std::string& name) {
  SimConfig cfg;
  auto& s = cfg.sys;
  s.n_rx = 2;
  s.n_rx_sen = 16;
  s.n_users = 2;
  s.n_streams = 2;
  s.n_sym = 16;
  s.n_cp = 8;
  s.carrier_hz = 73e9;
  s.spacing_hz = 240e3;
  s.tx_spacing_wl = s.rx_spacing_wl = s.sen_rx_spacing_wl = 0.5;
  s.p_tx = 10.0;  // 10 dB transmit SNR over unit-variance noise
  s.p_rf = 0.3;
  s.p_bb = 0.2;
  s.p_ps = 0.05;
  s.eta_pa = 1.0;
  s.noise_var = 1.0;
  s.noise_var_sen = 1.0;
  s.p_th = 1.0;

  const double deg = kPi / 180.0;
  cfg.grid = {-60.0 * deg, 60.0 * deg, 3.0 * deg};
  cfg.cfar = {8, 2};

  if (name == "setup1") {
    s.n_tx = 8;
    s.n_rf = 8;
    s.n_sub = 4;
    s.p_fa = 1e-2;
    cfg.scene = {Target{27.0 * deg, 156.0, -61.0, -15.0, 0.0}};
  } else if (name == "setup2") {
    s.n_tx = 32;
    s.n_rf = 32;
    s.n_sub = 32;
    s.p_fa = 1e-3;
    cfg.scene = {Target{-3.0 * deg, 78.0, -99.0, -25.0, 0.0},
                 Target{27.0 * deg, 370.0, 74.0, -25.0, 0.0}};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  s.target_angles_rad.clear();
  for (const auto& t : cfg.scene) s.target_angles_rad.push_back(t.angle_rad);
  cfg.validate();
  return cfg;
}

void apply_architecture(SimConfig& cfg, Architecture arch, int n_rf_override,
                        const std::string& preset_name) {
  auto& s = cfg.sys;
  const bool setup1 = preset_name == "setup1";
  const bool setup2 = preset_name == "setup2";
  if (arch == Architecture::FD) {
    if (n_rf_override > 0) {
      s.n_rf = n_rf_override;
      s.n_tx = n_rf_override;
    }
  } else {
    if (setup1) {
      s.n_tx = 16;
      s.n_rf = 4;
      for (auto& t : cfg.scene) t.rcs_db = -20.0;
    } else if (setup2) {
      s.n_tx = 32;
      s.n_rf = 8;
    }
    if (n_rf_override > 0) s.n_rf = n_rf_override;
    if (arch == Architecture::PC && s.n_tx % s.n_rf != 0)
      throw std::invalid_argument("PC front end needs n_tx divisible by n_rf");
  }
  cfg.validate();
}

namespace {

using nlohmann::json;

json to_json(const SystemConfig& s) {
  return json{{"n_tx", s.n_tx},
              {"n_rf", s.n_rf},
              {"n_rx", s.n_rx},
              {"n_rx_sen", s.n_rx_sen},
              {"n_users", s.n_users},
              {"n_streams", s.n_streams},
              {"n_sub", s.n_sub},
              {"n_sym", s.n_sym},
              {"n_cp", s.n_cp},
              {"carrier_hz", s.carrier_hz},
              {"spacing_hz", s.spacing_hz},
              {"tx_spacing_wl", s.tx_spacing_wl},
              {"rx_spacing_wl", s.rx_spacing_wl},
              {"sen_rx_spacing_wl", s.sen_rx_spacing_wl},
              {"p_tx_w", s.p_tx},
              {"p_rf_w", s.p_rf},
              {"p_bb_w", s.p_bb},
              {"p_ps_w", s.p_ps},
              {"eta_pa", s.eta_pa},
              {"noise_var", s.noise_var},
              {"noise_var_sen", s.noise_var_sen},
              {"p_th_w", s.p_th},
              {"p_fa", s.p_fa},
              {"target_angles_rad", s.target_angles_rad}};
}

void from_json_sys(const json& j, SystemConfig& s) {
  j.at("n_tx").get_to(s.n_tx);
  j.at("n_rf").get_to(s.n_rf);
  j.at("n_rx").get_to(s.n_rx);
  j.at("n_rx_sen").get_to(s.n_rx_sen);
  j.at("n_users").get_to(s.n_users);
  j.at("n_streams").get_to(s.n_streams);
  j.at("n_sub").get_to(s.n_sub);
  j.at("n_sym").get_to(s.n_sym);
  j.at("n_cp").get_to(s.n_cp);
  j.at("carrier_hz").get_to(s.carrier_hz);
  j.at("spacing_hz").get_to(s.spacing_hz);
  s.tx_spacing_wl = j.value("tx_spacing_wl", 0.5);
  s.rx_spacing_wl = j.value("rx_spacing_wl", 0.5);
  s.sen_rx_spacing_wl = j.value("sen_rx_spacing_wl", 0.5);
  j.at("p_tx_w").get_to(s.p_tx);
  j.at("p_rf_w").get_to(s.p_rf);
  j.at("p_bb_w").get_to(s.p_bb);
  j.at("p_ps_w").get_to(s.p_ps);
  s.eta_pa = j.value("eta_pa", 1.0);
  s.noise_var = j.value("noise_var", 1.0);
  s.noise_var_sen = j.value("noise_var_sen", 1.0);
  j.at("p_th_w").get_to(s.p_th);
  j.at("p_fa").get_to(s.p_fa);
  s.target_angles_rad = j.value("target_angles_rad", std::vector<double>{});
}

json to_json(const Target& t) {
  return json{{"angle_rad", t.angle_rad},
              {"range_m", t.range_m},
              {"velocity_mps", t.velocity_mps},
              {"rcs_db", t.rcs_db},
              {"rcs_phase_rad", t.rcs_phase_rad}};
}

Target target_from_json(const json& j) {
  Target t;
  j.at("angle_rad").get_to(t.angle_rad);
  j.at("range_m").get_to(t.range_m);
  j.at("velocity_mps").get_to(t.velocity_mps);
  j.at("rcs_db").get_to(t.rcs_db);
  t.rcs_phase_rad = j.value("rcs_phase_rad", 0.0);
  return t;
}

json full_json(const SimConfig& cfg) {
  json targets = json::array();
  for (const auto& t : cfg.scene) targets.push_back(to_json(t));
  return json{
      {"schema_version", 1},
      {"system", to_json(cfg.sys)},
      {"channel",
       {{"n_clusters", cfg.channel.n_clusters},
        {"n_rays", cfg.channel.n_rays},
        {"angle_spread_rad", cfg.channel.angle_spread_rad},
        {"angle_range_rad", cfg.channel.angle_range_rad},
        {"delay_spread_s", cfg.channel.delay_spread_s}}},
      {"scene", targets},
      {"grid",
       {{"min_rad", cfg.grid.min_rad},
        {"max_rad", cfg.grid.max_rad},
        {"step_rad", cfg.grid.step_rad}}},
      {"cfar", {{"n_train", cfg.cfar.n_train}, {"n_guard", cfg.cfar.n_guard}}},
      {"optimizer",
       {{"lambda0", cfg.opt.lambda0},
        {"nu", cfg.opt.nu},
        {"r_outer", cfg.opt.r_outer},
        {"r_inner", cfg.opt.r_inner},
        {"tol_obj", cfg.opt.tol_obj},
        {"round_eps", cfg.opt.round_eps},
        {"lambda_stop", cfg.opt.lambda_stop},
        {"sub_tol", cfg.opt.sub_tol},
        {"sub_iters", cfg.opt.sub_iters}}}};
}

}  // namespace

std::string config_to_json(const SimConfig& cfg) { return full_json(cfg).dump(2); }

SimConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  SimConfig cfg;
  from_json_sys(j.at("system"), cfg.sys);
  if (j.contains("channel")) {
    const auto& c = j.at("channel");
    cfg.channel.n_clusters = c.value("n_clusters", cfg.channel.n_clusters);
    cfg.channel.n_rays = c.value("n_rays", cfg.channel.n_rays);
    cfg.channel.angle_spread_rad =
        c.value("angle_spread_rad", cfg.channel.angle_spread_rad);
    cfg.channel.angle_range_rad =
        c.value("angle_range_rad", cfg.channel.angle_range_rad);
    cfg.channel.delay_spread_s = c.value("delay_spread_s", cfg.channel.delay_spread_s);
  }
  if (j.contains("scene"))
    for (const auto& t : j.at("scene")) cfg.scene.push_back(target_from_json(t));
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    g.at("min_rad").get_to(cfg.grid.min_rad);
    g.at("max_rad").get_to(cfg.grid.max_rad);
    g.at("step_rad").get_to(cfg.grid.step_rad);
  }
  if (j.contains("cfar")) {
    const auto& c = j.at("cfar");
    cfg.cfar.n_train = c.value("n_train", cfg.cfar.n_train);
    cfg.cfar.n_guard = c.value("n_guard", cfg.cfar.n_guard);
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    cfg.opt.lambda0 = o.value("lambda0", cfg.opt.lambda0);
    cfg.opt.nu = o.value("nu", cfg.opt.nu);
    cfg.opt.r_outer = o.value("r_outer", cfg.opt.r_outer);
    cfg.opt.r_inner = o.value("r_inner", cfg.opt.r_inner);
    cfg.opt.tol_obj = o.value("tol_obj", cfg.opt.tol_obj);
    cfg.opt.round_eps = o.value("round_eps", cfg.opt.round_eps);
    cfg.opt.lambda_stop = o.value("lambda_stop", cfg.opt.lambda_stop);
    cfg.opt.sub_tol = o.value("sub_tol", cfg.opt.sub_tol);
    cfg.opt.sub_iters = o.value("sub_iters", cfg.opt.sub_iters);
  }
  if (cfg.sys.target_angles_rad.empty())
    for (const auto& t : cfg.scene) cfg.sys.target_angles_rad.push_back(t.angle_rad);
  cfg.validate();
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const SimConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file '" + path + "'");
  out << config_to_json(cfg) << "\n";
}

}  // namespace isac
