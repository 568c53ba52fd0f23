#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "adcps/config.hpp"
#include "adcps/csvio.hpp"
#include "adcps/errors.hpp"
#include "adcps/plants.hpp"
#include "adcps/scenario.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace adcps;

namespace {

// Small, fast variant of the built-in scenario for unit runs.
LoadedConfig small_ip(int T = 400) {
  LoadedConfig lc = default_ip_config();
  lc.scenario.run.T = T;
  lc.scenario.attack.schedule = {T / 4, (3 * T) / 4};
  lc.scenario.detector.k_samples = 8000;
  lc.scenario.cusum.enabled = false;
  return lc;
}

std::string rows_to_string(const std::vector<SweepRow>& rows) {
  CsvWriter csv({"W", "sigma_wbar", "sigma_a", "alpha_bar", "kappa", "trial", "seed", "fpe",
                 "dr", "fne"});
  for (const auto& r : rows) {
    csv.add_row({std::to_string(r.W), format_double(r.sigma_wbar), format_double(r.sigma_a),
                 format_double(r.alpha_bar), format_double(r.kappa), std::to_string(r.trial),
                 std::to_string(r.seed), r.fpe ? format_double(*r.fpe) : "",
                 r.dr ? format_double(*r.dr) : "", r.fne ? format_double(*r.fne) : ""});
  }
  return csv.str();
}

}  // namespace

TEST_CASE("metrics: arithmetic on hand-built records") {
  std::vector<DetectionRecord> records;
  for (int t = 2; t < 1000; ++t) {
    DetectionRecord rec;
    rec.t = t;
    rec.flag = (t % 50 == 0) ? 1 : 0;  // 19 alarms at 50,100,...,950
    records.push_back(rec);
  }
  SUBCASE("no attack window: everything counts toward fpe") {
    const Metrics m = compute_metrics(records, AttackSchedule{0, 0}, 1000);
    REQUIRE(m.fpe.has_value());
    CHECK(*m.fpe == doctest::Approx(19.0 / 1000.0));
    CHECK_FALSE(m.dr.has_value());
    CHECK_FALSE(m.fne.has_value());
  }
  SUBCASE("alarms split by the window") {
    const AttackSchedule schedule{300, 800};
    const Metrics m = compute_metrics(records, schedule, 1000);
    // alarms at 300,...,750 inside (10), the rest outside (9)
    REQUIRE(m.dr.has_value());
    CHECK(*m.dr == doctest::Approx(10.0 / 500.0));
    CHECK(*m.fne == doctest::Approx(1.0 - 10.0 / 500.0));
    CHECK(*m.fpe == doctest::Approx(9.0 / 500.0));
  }
  SUBCASE("independent recount agrees exactly") {
    const AttackSchedule schedule{300, 800};
    const Metrics m = compute_metrics(records, schedule, 1000);
    int inside = 0, outside = 0;
    for (const auto& r : records) {
      if (!r.flag) continue;
      if (r.t >= 300 && r.t < 800)
        ++inside;
      else
        ++outside;
    }
    CHECK(*m.fpe == doctest::Approx(outside / 500.0));
    CHECK(*m.dr == doctest::Approx(inside / 500.0));
  }
}

TEST_CASE("scenario: no attack leaves every step honest and dr absent") {
  LoadedConfig lc = small_ip();
  lc.scenario.attack.kind = AttackKind::none;
  const ScenarioResult res = run_scenario(lc.scenario);
  CHECK_FALSE(res.metrics.dr.has_value());
  REQUIRE(res.metrics.fpe.has_value());
  for (int t = 2; t <= lc.scenario.run.T; ++t)
    CHECK(is_w_step_honest(res.trace, t, 2));
  CHECK(res.records.size() ==
        static_cast<std::size_t>(lc.scenario.run.T - lc.scenario.detector.W + 2));
}

TEST_CASE("scenario: runs are deterministic per seed") {
  const LoadedConfig lc = small_ip();
  const ScenarioResult a = run_scenario(lc.scenario);
  const ScenarioResult b = run_scenario(lc.scenario);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].test_norm == b.records[i].test_norm);
    CHECK(a.records[i].flag == b.records[i].flag);
  }
  for (std::size_t t = 0; t < a.trace.v.size(); ++t)
    CHECK((a.trace.v[t] - b.trace.v[t]).norm() == 0.0);
}

TEST_CASE("scenario: detection records satisfy the flag invariant") {
  const LoadedConfig lc = small_ip();
  const ScenarioResult res = run_scenario(lc.scenario);
  for (const auto& rec : res.records)
    CHECK(rec.flag == (rec.test_norm > rec.threshold ? 1 : 0));
  if (res.metrics.dr) {
    CHECK(*res.metrics.fne == doctest::Approx(1.0 - *res.metrics.dr));
    CHECK(*res.metrics.dr >= 0.0);
    CHECK(*res.metrics.dr <= 1.0);
  }
}

TEST_CASE("scenario: alarm density concentrates inside the attack window") {
  LoadedConfig lc = small_ip(1000);
  lc.scenario.attack.schedule = {300, 800};
  // Tune the gain so the nominal rate is low but nonzero.
  const CalibrationReport cal = calibrate_scenario(lc.scenario, 0.02, lc.sweep.kappa_grid, {}, 10);
  REQUIRE(cal.kappa.kappa.has_value());
  lc.scenario.detector.kappa = *cal.kappa.kappa;

  const ScenarioResult res = run_scenario(lc.scenario);
  REQUIRE(res.metrics.dr.has_value());
  const double inside = *res.metrics.dr;
  const double outside = *res.metrics.fpe;
  CHECK(inside >= 10.0 * outside);
}

TEST_CASE("sweep: single-point grid equals run_scenario") {
  LoadedConfig lc = small_ip();
  lc.scenario.attack.kind = AttackKind::none;
  SweepAxes axes;
  axes.kappa = {lc.scenario.detector.kappa};
  const auto rows = sweep(lc.scenario, axes, 1, /*with_attack=*/false);
  REQUIRE(rows.size() == 1);
  const ScenarioResult direct = run_scenario(lc.scenario);
  CHECK(*rows.front().fpe == doctest::Approx(*direct.metrics.fpe).epsilon(1e-12));
}

TEST_CASE("sweep: fpe is non-increasing along the threshold axis") {
  LoadedConfig lc = small_ip();
  lc.scenario.attack.kind = AttackKind::none;
  SweepAxes axes;
  axes.kappa = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
  axes.W = {5, 20};
  const auto rows = sweep(lc.scenario, axes, 3, false);
  // Rows come back grouped per (cell, trial) in threshold order.
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].W == rows[i - 1].W && rows[i].trial == rows[i - 1].trial &&
        rows[i].kappa > rows[i - 1].kappa)
      CHECK(*rows[i].fpe <= *rows[i - 1].fpe);
  }
}

TEST_CASE("sweep: byte-identical CSV across repeated runs") {
  LoadedConfig lc = small_ip();
  lc.scenario.attack.kind = AttackKind::none;
  SweepAxes axes;
  axes.kappa = {0.1, 0.5};
  axes.sigma_wbar = {0.005, 0.05};
  const std::string a = rows_to_string(sweep(lc.scenario, axes, 2, false));
  const std::string b = rows_to_string(sweep(lc.scenario, axes, 2, false));
  CHECK(a == b);
  CHECK(a.find("W,sigma_wbar") == 0);
}

TEST_CASE("fne surface: monotone in time and saturating bound") {
  LoadedConfig lc = small_ip();
  lc.scenario.attack.kind = AttackKind::none;
  const std::vector<int> times = {2, 5, 10, 25, 50, 100, 200};
  const auto rows = fne_surface(lc.scenario, {0.001, 0.01}, times);
  REQUIRE(rows.size() == 2 * times.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].sigma_w == rows[i - 1].sigma_w) {
      CHECK(rows[i].exponent >= rows[i - 1].exponent - 1e-12);
      CHECK(rows[i].bound <= rows[i - 1].bound + 1e-12);
    }
  }
  // Double-entry check of the exponent arithmetic.
  const PreparedScenario ps = prepare_scenario(lc.scenario);
  for (const auto& row : rows) {
    if (row.vacuous) continue;
    const AnalysisConstants c = analysis_constants(ps.loop.A_K, row.sigma_w);
    const double alt = 2.0 * std::log(row.epsilon) -
                       std::log(ps.detector.k_constant * row.sigma_w * c.M_bar);
    CHECK(row.exponent == doctest::Approx(alt).epsilon(1e-12));
  }
}

TEST_CASE("comparison harness: identical calls give identical rows") {
  LoadedConfig lc = small_ip();
  lc.scenario.cusum.enabled = true;
  lc.scenario.detector.kappa = 0.3;
  const auto a = compare_detectors(lc.scenario, 3);
  const auto b = compare_detectors(lc.scenario, 3);
  REQUIRE(a.size() == 6);  // adcps + cusum per trial
  REQUIRE(b.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].algorithm == b[i].algorithm);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].fpe.value_or(-1) == b[i].fpe.value_or(-1));
    CHECK(a[i].dr.value_or(-1) == b[i].dr.value_or(-1));
  }
  // Distinct seeds per trial.
  CHECK(a[0].seed != a[2].seed);
}

TEST_CASE("watermarking exposes a replayed output stream") {
  // Record honest outputs from one seed, then replay them against runs with
  // a different seed, with and without watermarking, at the same CUSUM level.
  LoadedConfig lc = small_ip(600);
  lc.scenario.attack.kind = AttackKind::none;
  lc.scenario.cusum.enabled = true;
  lc.scenario.cusum.h = 200.0;  // fixed level shared by both arms
  lc.scenario.detector.kappa = 1.0;

  PreparedScenario ps = prepare_scenario(lc.scenario);

  // A plausible nominal output stream recorded by the adversary: a closed-loop
  // run from an unrelated seed.
  const int T = lc.scenario.run.T;
  std::vector<Vector> fake(T + 1, Vector::Zero(4));
  {
    RngStream rng_w(999, 1), rng_wbar(999, 2);
    const SystemModel& sys = ps.cfg.system;
    Vector x = Vector::Zero(4);
    FilterState fs{Vector::Zero(4), 0};
    for (int t = 0; t <= T; ++t) {
      const Vector y = sys.C * x + ps.cfg.measurement_noise.sample(rng_wbar);
      fake[t] = y;
      const Vector u = sys.K * fs.x_hat;
      const FilterOutput fo = filter_step(*ps.kalman, fs, y, u, sys);
      if (t < T) {
        x = sys.A * x + sys.B * u + ps.cfg.process_noise.sample(rng_w);
        fs = fo.next;
      }
    }
  }
  const auto path = std::filesystem::temp_directory_path() / "adcps_replay_test.csv";
  {
    std::ofstream out(path);
    out << "t,y1,y2,y3,y4\n";
    for (int t = 0; t <= T; ++t)
      out << t << ',' << fake[t](0) << ',' << fake[t](1) << ',' << fake[t](2) << ','
          << fake[t](3) << '\n';
  }

  LoadedConfig attacked = lc;
  attacked.scenario.attack.kind = AttackKind::replay_file;
  attacked.scenario.attack.file = path.string();
  attacked.scenario.attack.schedule = {150, 450};

  auto attack_rate = [&](std::optional<Matrix> watermark) {
    LoadedConfig arm = attacked;
    arm.scenario.cusum.watermark_cov = watermark;
    const PreparedScenario prep = prepare_scenario(arm.scenario);
    const ScenarioResult res = run_prepared(prep, arm.scenario.run.seed, 0);
    REQUIRE(res.cusum_metrics.dr.has_value());
    return *res.cusum_metrics.dr;
  };

  const double without = attack_rate(std::nullopt);
  const double with = attack_rate(Matrix::Constant(1, 1, 25.0));
  std::filesystem::remove(path);
  CHECK(with > without);
}

TEST_CASE("honesty study: paired runs share their honest draws") {
  LoadedConfig lc = small_ip(500);
  lc.scenario.attack.kind = AttackKind::deception;
  lc.scenario.attack.schedule = {100, 400};
  lc.scenario.attack.on_len = 5;
  lc.scenario.attack.off_len = 10;
  lc.scenario.attack.deception.A_a = 0.95 * Matrix::Identity(4, 4);
  lc.scenario.attack.deception.Sigma_a = 1e-6 * Matrix::Identity(4, 4);
  lc.scenario.attack.deception.sigma_a_bound = 1e-6;
  lc.scenario.detector.kappa = 0.3;

  const auto rows = honesty_violation_study(lc.scenario, 4);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.fpe_attacked >= 0.0);
    CHECK(row.fpe_nominal >= 0.0);
    // A vanishing attack cannot shift the honest-step alarm rate much.
    CHECK(std::abs(row.fpe_attacked - row.fpe_nominal) < 0.02);
  }
}

TEST_CASE("config: parsing, defaults, and validation") {
  SUBCASE("valid config round trip") {
    const std::string text = R"({
      "system": {"A": [[0.5, 0.0], [0.0, 0.25]], "B": [[1.0], [0.5]], "K": [[0.0, 0.0]]},
      "noise": {"process": {"kind": "gaussian", "cov": 0.01},
                "measurement": {"kind": "uniform-box", "cov": 0.02}},
      "attack": {"kind": "deception", "t_start": 50, "t_stop": 150, "sigma_a": 0.1},
      "detector": {"mode": "residual", "W": 10, "delta": 0.05, "kappa": 0.7,
                   "k": {"mode": "fixed", "value": 2.0}},
      "cusum": {"statistic": "norm", "h": 12.0},
      "run": {"T": 200, "seed": 9, "trials": 2}
    })";
    const LoadedConfig lc = parse_config(text);
    CHECK(lc.scenario.system.d() == 2);
    CHECK(lc.scenario.system.p() == 2);  // C defaults to identity
    CHECK(lc.scenario.process_noise.covariance()(0, 0) == doctest::Approx(0.01));
    CHECK(lc.scenario.measurement_noise.kind() == NoiseKind::uniform_box);
    CHECK(lc.scenario.attack.kind == AttackKind::deception);
    CHECK(lc.scenario.attack.schedule.delta() == 100);
    CHECK(lc.scenario.detector.W == 10);
    CHECK(lc.scenario.detector.k_mode == KMode::fixed);
    CHECK(lc.scenario.detector.k_fixed == doctest::Approx(2.0));
    CHECK(lc.scenario.cusum.statistic == CusumStatistic::norm);
    CHECK(lc.scenario.run.seed == 9);
  }
  SUBCASE("window beyond the horizon is rejected") {
    const std::string text = R"({
      "system": {"A": [[0.5]], "B": [[1.0]], "K": [[0.0]]},
      "noise": {"process": {"cov": 0.01}},
      "attack": {"kind": "deception", "t_start": 10, "t_stop": 500, "sigma_a": 0.1},
      "run": {"T": 100}
    })";
    CHECK_THROWS_AS(parse_config(text), config_error);
  }
  SUBCASE("missing attack file is rejected") {
    const std::string text = R"({
      "system": {"A": [[0.5]], "B": [[1.0]], "K": [[0.0]]},
      "noise": {"process": {"cov": 0.01}},
      "attack": {"kind": "custom-sequence", "t_start": 5, "t_stop": 20,
                 "file": "no_such_file.csv"},
      "run": {"T": 50}
    })";
    CHECK_THROWS_AS(parse_config(text), config_error);
  }
  SUBCASE("malformed JSON is a configuration error") {
    CHECK_THROWS_AS(parse_config("{not json"), config_error);
  }
  SUBCASE("the built-in scenario prepares cleanly") {
    LoadedConfig lc = default_ip_config();
    lc.scenario.detector.k_samples = 4000;
    const PreparedScenario ps = prepare_scenario(lc.scenario);
    CHECK(ps.loop.rho < 1.0);
    CHECK(ps.detector.k_constant > 0.0);
    CHECK(ps.cusum_h > 0.0);
    REQUIRE(ps.kalman.has_value());
    CHECK(ps.kalman->dare_residual < 1e-9);
  }
}

TEST_CASE("full-state scenario: bounds surface when a certificate exists") {
  // Contractive loop so the drift certificate applies.
  SystemModel sys = testutil::system_from_loop(0.5 * Matrix::Identity(2, 2));
  ScenarioConfig cfg;
  cfg.system = sys;
  cfg.process_noise = NoiseModel::gaussian(0.01 * Matrix::Identity(2, 2));
  cfg.measurement_noise = NoiseModel::zero(2);
  cfg.detector.mode = DetectorMode::full_state;
  cfg.detector.k_mode = KMode::fixed;
  cfg.detector.k_fixed = 1.0;
  cfg.attack.kind = AttackKind::none;
  cfg.run = {200, 5, 1};
  const ScenarioResult res = run_scenario(cfg);
  REQUIRE(res.bound_fpe.has_value());
  CHECK(*res.bound_fpe > 0.01);  // delta plus a positive drift term
  REQUIRE(res.bound_fne.has_value());
  CHECK(*res.bound_fne >= 2.0 * 0.01);
}
