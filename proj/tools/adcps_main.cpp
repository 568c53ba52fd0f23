#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adcps/config.hpp"
#include "adcps/csvio.hpp"
#include "adcps/errors.hpp"
#include "adcps/scenario.hpp"

namespace {

using adcps::format_double;
using json = nlohmann::json;
namespace fs = std::filesystem;

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string out = "out";
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config, "JSON scenario config (built-in cart-pole when omitted)");
  cmd->add_option("--seed", opts.seed, "override run.seed");
  cmd->add_option("--trials", opts.trials, "override run.trials");
  cmd->add_option("--out", opts.out, "output directory")->capture_default_str();
  cmd->add_option("--format", opts.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

adcps::LoadedConfig load(const CommonOpts& opts) {
  adcps::LoadedConfig lc =
      opts.config.empty() ? adcps::default_ip_config() : adcps::load_config(opts.config);
  if (opts.seed) lc.scenario.run.seed = *opts.seed;
  if (opts.trials) lc.scenario.run.trials = *opts.trials;
  return lc;
}

// Rows accumulate as JSON values; CSV rendering formats numbers with
// format_double so identical runs yield identical bytes.
class RowSink {
 public:
  explicit RowSink(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<json> cells) {
    if (cells.size() != columns_.size()) throw adcps::data_error("RowSink: row width mismatch");
    rows_.push_back(std::move(cells));
  }

  void write(const fs::path& dir, const std::string& name, const std::string& format) const {
    fs::create_directories(dir);
    if (format == "json") {
      json out = json::array();
      for (const auto& row : rows_) {
        json obj = json::object();
        for (std::size_t i = 0; i < columns_.size(); ++i) obj[columns_[i]] = row[i];
        out.push_back(std::move(obj));
      }
      std::ofstream file(dir / (name + ".json"), std::ios::binary);
      file << out.dump(2) << '\n';
      std::cout << "wrote " << (dir / (name + ".json")).string() << " (" << rows_.size()
                << " rows)\n";
      return;
    }
    adcps::CsvWriter csv(columns_);
    for (const auto& row : rows_) {
      std::vector<std::string> cells;
      cells.reserve(row.size());
      for (const json& v : row) {
        if (v.is_null())
          cells.emplace_back("");
        else if (v.is_string())
          cells.push_back(v.get<std::string>());
        else if (v.is_number_integer())
          cells.push_back(std::to_string(v.get<long long>()));
        else if (v.is_number_unsigned())
          cells.push_back(std::to_string(v.get<unsigned long long>()));
        else
          cells.push_back(format_double(v.get<double>()));
      }
      csv.add_row(std::move(cells));
    }
    csv.write(dir / (name + ".csv"));
    std::cout << "wrote " << (dir / (name + ".csv")).string() << " (" << rows_.size()
              << " rows)\n";
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<json>> rows_;
};

json opt_cell(const std::optional<double>& v) { return v ? json(*v) : json(); }

RowSink sweep_rows(const std::vector<adcps::SweepRow>& rows) {
  RowSink sink({"W", "sigma_wbar", "sigma_a", "alpha_bar", "kappa", "trial", "seed", "fpe", "dr",
                "fne"});
  for (const auto& r : rows)
    sink.add({r.W, r.sigma_wbar, r.sigma_a, r.alpha_bar, r.kappa, r.trial, r.seed,
              opt_cell(r.fpe), opt_cell(r.dr), opt_cell(r.fne)});
  return sink;
}

int cmd_simulate(const CommonOpts& opts) {
  const adcps::LoadedConfig lc = load(opts);
  const adcps::PreparedScenario ps = adcps::prepare_scenario(lc.scenario);
  adcps::RngStream rng_x0(lc.scenario.run.seed, 1), rng_w(lc.scenario.run.seed, 2);
  const adcps::Vector x0 = lc.scenario.initial_state
                               ? lc.scenario.initial_state->sample(rng_x0)
                               : adcps::Vector::Zero(ps.cfg.system.d());
  const adcps::Trajectory traj =
      adcps::simulate(ps.cfg.system, ps.cfg.process_noise, x0, ps.cfg.run.T, rng_w);

  std::vector<std::string> cols = {"t"};
  for (int i = 0; i < ps.cfg.system.d(); ++i) cols.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < ps.cfg.system.m(); ++i) cols.push_back("u" + std::to_string(i + 1));
  for (int i = 0; i < ps.cfg.system.p(); ++i) cols.push_back("y" + std::to_string(i + 1));
  RowSink sink(cols);
  for (int t = 0; t <= traj.horizon; ++t) {
    std::vector<json> row = {t};
    for (int i = 0; i < ps.cfg.system.d(); ++i) row.push_back(traj.states[t](i));
    for (int i = 0; i < ps.cfg.system.m(); ++i)
      row.push_back(t < traj.horizon ? json(traj.inputs[t](i)) : json());
    for (int i = 0; i < ps.cfg.system.p(); ++i) row.push_back(traj.outputs[t](i));
    sink.add(std::move(row));
  }
  sink.write(opts.out, "trajectory", opts.format);
  return 0;
}

int cmd_calibrate(const CommonOpts& opts) {
  const adcps::LoadedConfig lc = load(opts);
  const adcps::CalibrationReport report =
      adcps::calibrate_scenario(lc.scenario, lc.sweep.target_fpe, lc.sweep.kappa_grid,
                                lc.sweep.h_grid, lc.sweep.calibration_runs);

  std::cout << "alpha = " << format_double(report.alpha) << " (k = "
            << format_double(report.k_used) << ")\n";
  if (report.kappa.kappa)
    std::cout << "kappa* = " << format_double(*report.kappa.kappa) << " (target fpe "
              << format_double(lc.sweep.target_fpe) << ")\n";
  else
    std::cout << "kappa*: no grid point met the target; see the curve\n";
  if (!report.cusum.curve.empty()) {
    if (report.cusum.h)
      std::cout << "cusum h* = " << format_double(*report.cusum.h) << " (nu = "
                << format_double(report.cusum_nu) << ")\n";
    else
      std::cout << "cusum h*: no grid point met the target; see the curve\n";
  }

  RowSink kappa_sink({"kappa", "alpha_bar", "fpe"});
  for (const auto& [kappa, fpe] : report.kappa.curve)
    kappa_sink.add({kappa, kappa * report.alpha, fpe});
  kappa_sink.write(opts.out, "kappa_curve", opts.format);

  if (!report.cusum.curve.empty()) {
    RowSink h_sink({"h", "fpe"});
    for (const auto& [h, fpe] : report.cusum.curve) h_sink.add({h, fpe});
    h_sink.write(opts.out, "cusum_curve", opts.format);
  }
  return report.kappa.kappa ? 0 : 3;
}

int cmd_detect(const CommonOpts& opts) {
  const adcps::LoadedConfig lc = load(opts);
  const adcps::ScenarioResult res = adcps::run_scenario(lc.scenario);

  RowSink records({"t", "test_norm", "threshold", "flag", "detector"});
  for (const auto& r : res.records)
    records.add({r.t, r.test_norm, r.threshold, r.flag,
                 r.mode == adcps::DetectorMode::residual ? "adcps-residual" : "adcps-state"});
  for (const auto& r : res.cusum_records)
    records.add({r.t, r.S, r.threshold, r.flag, "cusum"});
  records.write(opts.out, "records", opts.format);

  auto print_metrics = [](const char* name, const adcps::Metrics& m) {
    std::cout << name << ": fpe=" << (m.fpe ? format_double(*m.fpe) : "n/a")
              << " dr=" << (m.dr ? format_double(*m.dr) : "n/a")
              << " fne=" << (m.fne ? format_double(*m.fne) : "n/a") << '\n';
  };
  print_metrics("adcps", res.metrics);
  if (!res.cusum_records.empty()) print_metrics("cusum", res.cusum_metrics);
  if (res.bound_fpe) std::cout << "fpe bound: " << format_double(*res.bound_fpe) << '\n';
  if (res.bound_fne) std::cout << "fne bound: " << format_double(*res.bound_fne) << '\n';
  std::cout << "runtime: " << format_double(res.runtime_seconds) << " s\n";
  return 0;
}

int cmd_sweep(const CommonOpts& opts, bool with_attack, const std::string& name) {
  const adcps::LoadedConfig lc = load(opts);
  adcps::SweepAxes axes = lc.sweep.axes;
  if (!with_attack) axes.sigma_a.clear();
  const auto rows = adcps::sweep(lc.scenario, axes, lc.scenario.run.trials, with_attack);
  sweep_rows(rows).write(opts.out, name, opts.format);
  return 0;
}

int cmd_tradeoff(const CommonOpts& opts) {
  const adcps::LoadedConfig lc = load(opts);
  adcps::SweepAxes axes = lc.sweep.axes;
  axes.W.clear();            // tradeoff holds W at the configured value
  axes.sigma_wbar.clear();   // and the configured measurement noise
  const auto rows = adcps::sweep(lc.scenario, axes, lc.scenario.run.trials, /*with_attack=*/true);
  sweep_rows(rows).write(opts.out, "tradeoff", opts.format);
  return 0;
}

int cmd_honesty(const CommonOpts& opts) {
  const adcps::LoadedConfig lc = load(opts);
  const int trials = lc.scenario.run.trials;
  const auto rows = adcps::honesty_violation_study(lc.scenario, trials);
  RowSink sink({"trial", "seed", "fpe_honest_steps_attacked", "fpe_never_attacked"});
  double sum_attacked = 0, sum_nominal = 0;
  for (const auto& r : rows) {
    sink.add({r.trial, r.seed, r.fpe_attacked, r.fpe_nominal});
    sum_attacked += r.fpe_attacked;
    sum_nominal += r.fpe_nominal;
  }
  sink.write(opts.out, "honesty_violation", opts.format);
  std::cout << "mean honest-step fpe attacked=" << format_double(sum_attacked / rows.size())
            << " nominal=" << format_double(sum_nominal / rows.size()) << '\n';
  return 0;
}

int cmd_compare(const CommonOpts& opts) {
  adcps::LoadedConfig lc = load(opts);
  lc.scenario.cusum.enabled = true;
  const auto rows = adcps::compare_detectors(lc.scenario, lc.scenario.run.trials);
  RowSink sink({"algorithm", "trial", "seed", "fpe", "dr", "fne", "note"});
  for (const auto& r : rows) {
    sink.add({r.algorithm, r.trial, r.seed, opt_cell(r.fpe), opt_cell(r.dr), opt_cell(r.fne),
              r.note});
    std::cout << r.algorithm << " trial " << r.trial << " (seed " << r.seed
              << "): fpe=" << (r.fpe ? format_double(*r.fpe) : "n/a")
              << " dr=" << (r.dr ? format_double(*r.dr) : "n/a") << '\n';
  }
  sink.write(opts.out, "compare", opts.format);
  return 0;
}

int cmd_fne_surface(const CommonOpts& opts) {
  const adcps::LoadedConfig lc = load(opts);
  if (lc.sweep.sigma_w.empty() || lc.sweep.times.empty())
    throw adcps::config_error("fne-surface: config needs sweep.sigma_w and sweep.times");
  const auto rows = adcps::fne_surface(lc.scenario, lc.sweep.sigma_w, lc.sweep.times);
  RowSink sink({"sigma_w", "t", "epsilon", "exponent", "bound", "vacuous"});
  for (const auto& r : rows)
    sink.add({r.sigma_w, r.t, r.epsilon,
              std::isfinite(r.exponent) ? json(r.exponent) : json("-inf"), r.bound,
              r.vacuous ? 1 : 0});
  sink.write(opts.out, "fne_surface", opts.format);
  return 0;
}

int cmd_bounds(const CommonOpts& opts) {
  const adcps::LoadedConfig lc = load(opts);
  const adcps::PreparedScenario ps = adcps::prepare_scenario(lc.scenario);
  const double sigma_w = ps.cfg.process_noise.sigma_bound();
  const double sigma0 = ps.cfg.initial_state ? ps.cfg.initial_state->sigma_bound() : 0.0;
  const int d = ps.cfg.system.d();
  const int T = ps.cfg.run.T;
  const double alpha = adcps::threshold_alpha(ps.detector);
  const double alpha_bar = adcps::working_threshold(ps.detector);
  const auto cert = adcps::stability_certificate(ps.loop.A_K, ps.cfg.process_noise.covariance());
  const auto sigma_x = adcps::state_cov_bound(ps.loop.A_K, sigma0, sigma_w, T);

  std::cout << "||A_K|| = " << format_double(ps.loop.op_norm)
            << ", rho(A_K) = " << format_double(ps.loop.rho) << '\n';
  std::cout << "M = " << format_double(ps.constants.M)
            << ", M_bar = " << format_double(ps.constants.M_bar)
            << ", h_bar = " << format_double(ps.constants.h_bar) << '\n';
  std::cout << "k = " << format_double(ps.detector.k_constant)
            << ", alpha = " << format_double(alpha)
            << ", alpha_bar = " << format_double(alpha_bar) << '\n';
  if (cert)
    std::cout << "certificate: gamma = " << format_double(cert->gamma)
              << ", K_radius = " << format_double(cert->K_radius)
              << ", beta = " << format_double(cert->beta) << '\n';
  else
    std::cout << "certificate: unavailable (lambda_max(A_K'A_K) >= 1)\n";

  RowSink sink({"t", "fpe_bound", "fpe_bound_simplified", "zeta_floor", "fne_epsilon",
                "fne_bound", "fne_vacuous"});
  for (int t = 2; t <= T; t = t < 10 ? t + 1 : t + std::max(1, T / 20)) {
    const auto fpe = adcps::fpe_bound(cert, ps.constants, ps.detector.delta,
                                      ps.detector.k_constant, sigma_w, d, 0.0, t);
    const double zeta = adcps::zeta_threshold(ps.constants, sigma_x, ps.detector.delta,
                                              ps.detector.k_constant, sigma_w, d, t, alpha_bar);
    const auto fne = adcps::fne_bound(ps.constants, sigma_x, ps.detector.delta,
                                      ps.detector.k_constant, sigma_w, t);
    sink.add({t, fpe ? json(fpe->value) : json(), fpe ? json(fpe->simplified) : json(), zeta,
              fne.epsilon, fne.bound, fne.vacuous ? 1 : 0});
  }
  sink.write(opts.out, "bounds", opts.format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and detection laboratory for false-data injection attacks on "
               "stochastic LTI control loops"};
  app.require_subcommand(1);

  CommonOpts opts;
  int (*handler)(const CommonOpts&) = nullptr;
  bool sweep_attack = false;
  std::string sweep_name;

  auto* simulate = app.add_subcommand("simulate", "roll out the honest closed loop");
  add_common(simulate, opts);
  simulate->callback([&] { handler = cmd_simulate; });

  auto* calibrate = app.add_subcommand("calibrate", "tune kappa and the cusum level on nominal runs");
  add_common(calibrate, opts);
  calibrate->callback([&] { handler = cmd_calibrate; });

  auto* detect = app.add_subcommand("detect", "run the configured scenario once");
  add_common(detect, opts);
  detect->callback([&] { handler = cmd_detect; });

  auto* sweep_fpe = app.add_subcommand("sweep-fpe", "nominal false-positive grid");
  add_common(sweep_fpe, opts);
  sweep_fpe->callback([&] {
    sweep_attack = false;
    sweep_name = "fpe_sweep";
  });

  auto* sweep_fne = app.add_subcommand("sweep-fne", "attacked false-negative grid");
  add_common(sweep_fne, opts);
  sweep_fne->callback([&] {
    sweep_attack = true;
    sweep_name = "fne_sweep";
  });

  auto* tradeoff = app.add_subcommand("tradeoff", "fpe/fne along the threshold axis");
  add_common(tradeoff, opts);
  tradeoff->callback([&] { handler = cmd_tradeoff; });

  auto* honesty = app.add_subcommand("honesty-violation", "honest-step fpe under intermittent attacks");
  add_common(honesty, opts);
  honesty->callback([&] { handler = cmd_honesty; });

  auto* compare = app.add_subcommand("compare", "adcps vs cusum on identical data");
  add_common(compare, opts);
  compare->callback([&] { handler = cmd_compare; });

  auto* surface = app.add_subcommand("fne-surface", "miss-rate exponent over (sigma_w, t)");
  add_common(surface, opts);
  surface->callback([&] { handler = cmd_fne_surface; });

  auto* bounds = app.add_subcommand("bounds", "evaluate the error bounds for the config");
  add_common(bounds, opts);
  bounds->callback([&] { handler = cmd_bounds; });

  try {
    app.parse(argc, argv);
    if (!sweep_name.empty()) return cmd_sweep(opts, sweep_attack, sweep_name);
    return handler ? handler(opts) : 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const adcps::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const adcps::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const adcps::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
