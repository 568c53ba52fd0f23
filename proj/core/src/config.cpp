#include "adcps/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "adcps/errors.hpp"
#include "adcps/plants.hpp"

namespace adcps {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw config_error("config: " + where + ": " + what);
}

// A matrix entry is a scalar (s -> s*I for square shapes), a flat array
// (column vector), or nested row-major arrays.
Matrix parse_matrix(const json& j, const std::string& where, int rows, int cols) {
  if (j.is_number()) {
    if (rows != cols) fail(where, "scalar shorthand needs a square shape");
    return j.get<double>() * Matrix::Identity(rows, rows);
  }
  if (!j.is_array() || j.empty()) fail(where, "expected a number or a nonempty array");
  Matrix m;
  if (j.front().is_array()) {
    const int r = static_cast<int>(j.size());
    const int c = static_cast<int>(j.front().size());
    m.resize(r, c);
    for (int i = 0; i < r; ++i) {
      if (!j[i].is_array() || static_cast<int>(j[i].size()) != c)
        fail(where, "ragged matrix rows");
      for (int k = 0; k < c; ++k) {
        if (!j[i][k].is_number()) fail(where, "non-numeric entry");
        m(i, k) = j[i][k].get<double>();
      }
    }
  } else {
    m.resize(static_cast<int>(j.size()), 1);
    for (int i = 0; i < m.rows(); ++i) {
      if (!j[i].is_number()) fail(where, "non-numeric entry");
      m(i, 0) = j[i].get<double>();
    }
  }
  if (rows >= 0 && m.rows() != rows) fail(where, "expected " + std::to_string(rows) + " rows");
  if (cols >= 0 && m.cols() != cols) fail(where, "expected " + std::to_string(cols) + " columns");
  return m;
}

NoiseModel parse_noise(const json& j, const std::string& where, int dim) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string kind = j.value("kind", "gaussian");
  if (!j.contains("cov")) fail(where, "missing 'cov'");
  const Matrix cov = parse_matrix(j.at("cov"), where + ".cov", dim, dim);

  NoiseModel model = [&] {
    if (kind == "gaussian") return NoiseModel::gaussian(cov);
    if (kind == "uniform-box") return NoiseModel::uniform_box(cov);
    if (kind == "truncated-gaussian")
      return NoiseModel::truncated_gaussian(cov, j.value("clip", 3.0));
    fail(where, "unknown noise kind '" + kind + "'");
  }();
  if (j.contains("sigma_bound")) model.set_sigma_bound(j.at("sigma_bound").get<double>());
  return model;
}

void parse_system(const json& j, ScenarioConfig& cfg) {
  if (!j.is_object()) fail("system", "expected an object");
  if (!j.contains("A") || !j.contains("B")) fail("system", "A and B are required");
  cfg.system.A = parse_matrix(j.at("A"), "system.A", -1, -1);
  const int d = static_cast<int>(cfg.system.A.rows());
  if (cfg.system.A.cols() != d) fail("system.A", "must be square");
  cfg.system.B = parse_matrix(j.at("B"), "system.B", d, -1);
  const int m = static_cast<int>(cfg.system.B.cols());
  cfg.system.C = j.contains("C") ? parse_matrix(j.at("C"), "system.C", -1, d)
                                 : Matrix::Identity(d, d);
  if (j.contains("K")) {
    cfg.system.K = parse_matrix(j.at("K"), "system.K", m, d);
  } else {
    cfg.system.K.resize(0, 0);  // designed via LQR at prepare time
    Matrix Q = Matrix::Identity(d, d);
    Matrix R = Matrix::Identity(m, m);
    if (j.contains("lqr")) {
      const json& l = j.at("lqr");
      if (l.contains("Q")) Q = parse_matrix(l.at("Q"), "system.lqr.Q", d, d);
      if (l.contains("R")) R = parse_matrix(l.at("R"), "system.lqr.R", m, m);
    }
    cfg.lqr_weights = {Q, R};
  }
}

void parse_attack(const json& j, ScenarioConfig& cfg, const std::filesystem::path& base) {
  if (!j.is_object()) fail("attack", "expected an object");
  const std::string kind = j.value("kind", "none");
  AttackSpec& a = cfg.attack;
  const int p = cfg.system.p();

  if (kind == "none") {
    a.kind = AttackKind::none;
    return;
  }
  if (!j.contains("t_start") || !j.contains("t_stop"))
    fail("attack", "t_start and t_stop are required");
  a.schedule.t_start = j.at("t_start").get<int>();
  a.schedule.t_stop = j.at("t_stop").get<int>();
  a.on_len = j.value("on_len", 0);
  a.off_len = j.value("off_len", 0);

  if (kind == "deception") {
    a.kind = AttackKind::deception;
    a.deception.A_a = j.contains("A_a") ? parse_matrix(j.at("A_a"), "attack.A_a", p, p)
                                        : 0.95 * Matrix::Identity(p, p);
    if (j.contains("cov_a")) {
      a.deception.Sigma_a = parse_matrix(j.at("cov_a"), "attack.cov_a", p, p);
    } else if (j.contains("sigma_a")) {
      a.deception.Sigma_a = j.at("sigma_a").get<double>() * Matrix::Identity(p, p);
    } else {
      fail("attack", "deception needs sigma_a or cov_a");
    }
    a.deception.sigma_a_bound = operator_norm(a.deception.Sigma_a);
  } else if (kind == "custom-sequence" || kind == "replay-file") {
    a.kind = kind == "replay-file" ? AttackKind::replay_file : AttackKind::custom_sequence;
    if (!j.contains("file")) fail("attack", kind + " needs a file");
    const std::filesystem::path file = base / j.at("file").get<std::string>();
    if (!std::filesystem::exists(file)) fail("attack.file", "no such file: " + file.string());
    a.file = file.string();
  } else if (kind == "min-energy") {
    a.kind = AttackKind::custom_sequence;
    a.min_energy = true;
    a.margin = j.value("margin", 1.0);
    a.gap = j.value("gap", 3);
    if (j.contains("direction")) {
      const Matrix dir = parse_matrix(j.at("direction"), "attack.direction", -1, 1);
      a.direction = dir.col(0);
    }
  } else {
    fail("attack", "unknown kind '" + kind + "'");
  }
}

void parse_detector(const json& j, ScenarioConfig& cfg) {
  if (!j.is_object()) fail("detector", "expected an object");
  DetectorSpec& d = cfg.detector;
  const std::string mode = j.value("mode", "residual");
  if (mode == "full-state")
    d.mode = DetectorMode::full_state;
  else if (mode == "residual")
    d.mode = DetectorMode::residual;
  else
    fail("detector.mode", "must be 'full-state' or 'residual'");
  d.W = j.value("W", 20);
  d.delta = j.value("delta", 0.01);
  d.kappa = j.value("kappa", 1.0);
  if (j.contains("k")) {
    const json& k = j.at("k");
    const std::string kmode = k.is_object() ? k.value("mode", "calibrated") : "fixed";
    if (k.is_number()) {
      d.k_mode = KMode::fixed;
      d.k_fixed = k.get<double>();
    } else if (kmode == "certified") {
      d.k_mode = KMode::certified;
    } else if (kmode == "fixed") {
      d.k_mode = KMode::fixed;
      d.k_fixed = k.value("value", certified_k());
    } else if (kmode == "calibrated") {
      d.k_mode = KMode::calibrated;
      d.k_samples = k.value("samples", 50000);
    } else {
      fail("detector.k", "unknown mode '" + kmode + "'");
    }
  }
}

void parse_cusum(const json& j, ScenarioConfig& cfg) {
  if (!j.is_object()) fail("cusum", "expected an object");
  CusumSpec& c = cfg.cusum;
  c.enabled = j.value("enabled", true);
  const std::string stat = j.value("statistic", "chi-square");
  if (stat == "chi-square")
    c.statistic = CusumStatistic::chi_square;
  else if (stat == "norm")
    c.statistic = CusumStatistic::norm;
  else
    fail("cusum.statistic", "must be 'chi-square' or 'norm'");
  if (j.contains("nu")) c.nu = j.at("nu").get<double>();
  if (j.contains("h")) c.h = j.at("h").get<double>();
  c.target_fpe = j.value("target_fpe", 0.025);
  c.reset_on_alarm = j.value("reset_on_alarm", true);
  if (j.contains("watermark_cov")) {
    const int m = cfg.system.m();
    c.watermark_cov = parse_matrix(j.at("watermark_cov"), "cusum.watermark_cov", m, m);
  }
}

template <typename T>
std::vector<T> parse_grid(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  std::vector<T> out;
  for (const auto& v : j) {
    if (!v.is_number()) fail(where, "non-numeric grid entry");
    out.push_back(v.get<T>());
  }
  return out;
}

LoadedConfig parse_json(const json& root, const std::filesystem::path& base) {
  if (!root.is_object()) throw config_error("config: top level must be an object");
  LoadedConfig out;
  ScenarioConfig& cfg = out.scenario;

  if (!root.contains("system")) throw config_error("config: missing 'system'");
  parse_system(root.at("system"), cfg);
  const int d = cfg.system.d();
  const int p = cfg.system.p();

  if (!root.contains("noise") || !root.at("noise").contains("process"))
    throw config_error("config: missing 'noise.process'");
  const json& noise = root.at("noise");
  cfg.process_noise = parse_noise(noise.at("process"), "noise.process", d);
  cfg.measurement_noise = noise.contains("measurement")
                              ? parse_noise(noise.at("measurement"), "noise.measurement", p)
                              : NoiseModel::zero(p);
  if (noise.contains("initial"))
    cfg.initial_state = parse_noise(noise.at("initial"), "noise.initial", d);

  if (root.contains("attack")) parse_attack(root.at("attack"), cfg, base);
  if (root.contains("detector")) parse_detector(root.at("detector"), cfg);
  if (root.contains("cusum")) parse_cusum(root.at("cusum"), cfg);

  if (root.contains("run")) {
    const json& r = root.at("run");
    cfg.run.T = r.value("T", 1000);
    cfg.run.seed = r.value("seed", std::uint64_t{2});
    cfg.run.trials = r.value("trials", 3);
  }
  if (cfg.run.T < 3) throw config_error("config: run.T must be at least 3");
  if (cfg.attack.kind != AttackKind::none && cfg.attack.schedule.t_stop > cfg.run.T)
    throw config_error("config: attack window must end by run.T");

  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    if (s.contains("alpha_bar")) out.sweep.axes.alpha_bar = parse_grid<double>(s.at("alpha_bar"), "sweep.alpha_bar");
    if (s.contains("kappa")) out.sweep.axes.kappa = parse_grid<double>(s.at("kappa"), "sweep.kappa");
    if (s.contains("sigma_wbar")) out.sweep.axes.sigma_wbar = parse_grid<double>(s.at("sigma_wbar"), "sweep.sigma_wbar");
    if (s.contains("sigma_a")) out.sweep.axes.sigma_a = parse_grid<double>(s.at("sigma_a"), "sweep.sigma_a");
    if (s.contains("W")) out.sweep.axes.W = parse_grid<int>(s.at("W"), "sweep.W");
    if (s.contains("sigma_w")) out.sweep.sigma_w = parse_grid<double>(s.at("sigma_w"), "sweep.sigma_w");
    if (s.contains("times")) out.sweep.times = parse_grid<int>(s.at("times"), "sweep.times");
  }
  if (root.contains("calibration")) {
    const json& c = root.at("calibration");
    if (c.contains("kappa_grid")) out.sweep.kappa_grid = parse_grid<double>(c.at("kappa_grid"), "calibration.kappa_grid");
    if (c.contains("h_grid")) out.sweep.h_grid = parse_grid<double>(c.at("h_grid"), "calibration.h_grid");
    out.sweep.target_fpe = c.value("target_fpe", 0.02);
    out.sweep.calibration_runs = c.value("runs", 20);
  }
  return out;
}

}  // namespace

LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path.string());
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw config_error("config: invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_json(root, path.has_parent_path() ? path.parent_path() : ".");
}

LoadedConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_json(root, base_dir);
}

LoadedConfig default_ip_config() {
  LoadedConfig out;
  ScenarioConfig& cfg = out.scenario;
  cfg.system = inverted_pendulum_cart();
  cfg.system.K.resize(0, 0);
  cfg.lqr_weights = {Matrix::Identity(4, 4), Matrix::Identity(1, 1)};
  cfg.process_noise = NoiseModel::gaussian(0.001 * Matrix::Identity(4, 4));
  cfg.measurement_noise = NoiseModel::gaussian(0.01 * Matrix::Identity(4, 4));

  cfg.attack.kind = AttackKind::deception;
  cfg.attack.schedule = {300, 800};
  cfg.attack.deception.A_a = 0.95 * Matrix::Identity(4, 4);
  cfg.attack.deception.Sigma_a = 0.1 * Matrix::Identity(4, 4);
  cfg.attack.deception.sigma_a_bound = 0.1;

  cfg.detector.mode = DetectorMode::residual;
  cfg.detector.W = 20;
  cfg.detector.delta = 0.01;
  cfg.detector.kappa = 1.0;
  cfg.detector.k_mode = KMode::calibrated;

  cfg.cusum.enabled = true;
  cfg.cusum.statistic = CusumStatistic::chi_square;
  cfg.cusum.target_fpe = 0.025;

  cfg.run = {1000, 2, 3};

  out.sweep.axes.kappa = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.7, 1.0, 1.5, 2.0};
  out.sweep.axes.sigma_wbar = {0.005, 0.01, 0.05, 0.1};
  out.sweep.axes.sigma_a = {0.01, 0.05, 0.1, 0.5};
  out.sweep.axes.W = {5, 20};
  out.sweep.sigma_w = {0.0005, 0.001, 0.005, 0.01};
  out.sweep.times = {2, 5, 10, 20, 50, 100, 200, 500, 1000};
  out.sweep.kappa_grid = {0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2, 0.25,
                          0.3,  0.35,  0.4, 0.5,   0.6, 0.8,   1.0, 1.5, 2.0};
  out.sweep.target_fpe = 0.02;
  out.sweep.calibration_runs = 20;
  return out;
}

}  // namespace adcps
