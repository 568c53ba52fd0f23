#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adcps/attack.hpp"
#include "adcps/cusum.hpp"
#include "adcps/detector.hpp"
#include "adcps/estimator.hpp"
#include "adcps/system.hpp"

namespace adcps {

struct RunSettings {
  int T = 1000;
  std::uint64_t seed = 2;
  int trials = 3;
};

enum class KMode { certified, fixed, calibrated };

struct DetectorSpec {
  DetectorMode mode = DetectorMode::residual;
  int W = 20;
  double delta = 0.01;
  double kappa = 1.0;
  KMode k_mode = KMode::calibrated;
  double k_fixed = certified_k();
  int k_samples = 50000;  // nominal samples drawn for KMode::calibrated
};

struct CusumSpec {
  bool enabled = false;
  CusumStatistic statistic = CusumStatistic::chi_square;
  std::optional<double> nu;          // default: nominal mean of the statistic
  std::optional<double> h;           // calibrated to target_fpe when absent
  double target_fpe = 0.025;
  bool reset_on_alarm = true;
  std::optional<Matrix> watermark_cov;
};

struct AttackSpec {
  AttackKind kind = AttackKind::none;
  AttackSchedule schedule;
  DeceptionParams deception;
  int on_len = 0, off_len = 0;  // duty cycle inside the window (0 = continuous)
  std::string file;             // custom-sequence rows, or outputs to replay
  Vector direction;             // min-energy spike direction
  double margin = 1.0;
  int gap = 3;
  bool min_energy = false;      // synthesize spikes meeting the energy floor
};

struct ScenarioConfig {
  SystemModel system;  // K may be empty; then lqr_weights designs it
  std::optional<std::pair<Matrix, Matrix>> lqr_weights;
  NoiseModel process_noise = NoiseModel::zero(1);
  NoiseModel measurement_noise = NoiseModel::zero(1);
  std::optional<NoiseModel> initial_state;  // absent: x0 = 0
  AttackSpec attack;
  DetectorSpec detector;
  CusumSpec cusum;
  RunSettings run;
};

struct Metrics {
  std::optional<double> fpe, dr, fne;
};

struct CusumRecord {
  int t = 0;
  double S = 0;
  double threshold = 0;
  int flag = 0;
};

struct ScenarioResult {
  std::vector<DetectionRecord> records;
  Metrics metrics;
  std::vector<CusumRecord> cusum_records;  // empty unless cusum is enabled
  Metrics cusum_metrics;
  AttackTrace trace;  // realized disturbance, one entry per step
  std::optional<double> bound_fpe, bound_fne;
  double runtime_seconds = 0;
};

// Everything deterministic that can be resolved once per configuration:
// feedback/filter design, analysis constants, the concentration constant k,
// and the CUSUM drift/level.
struct PreparedScenario {
  ScenarioConfig cfg;  // with system.K resolved
  ClosedLoop loop;
  AnalysisConstants constants;
  std::optional<KalmanDesign> kalman;  // residual mode only
  DetectorConfig detector;             // threshold inputs fully resolved
  double cusum_nu = 0;
  double cusum_h = 0;
  std::optional<AttackTrace> custom_trace;  // preloaded or synthesized fixed trace
  std::vector<Vector> replay_outputs;       // replacement data for replay runs
  std::vector<bool> replay_mask;            // which steps the file covers
};

PreparedScenario prepare_scenario(const ScenarioConfig& cfg);

// One run; draws are keyed by (master_seed, run_id), so cells of a sweep can
// execute in any order and still reproduce.
ScenarioResult run_prepared(const PreparedScenario& ps, std::uint64_t master_seed,
                            std::uint64_t run_id = 0);

ScenarioResult run_scenario(const ScenarioConfig& cfg);

// fpe = flags outside [T1,T2) / (T - delta); dr = flags inside / delta;
// fne = 1 - dr. dr/fne are absent when the window is empty.
template <typename Record>
Metrics compute_metrics(const std::vector<Record>& records, const AttackSchedule& schedule,
                        int T) {
  Metrics m;
  const int delta = schedule.delta();
  std::int64_t outside = 0, inside = 0;
  for (const auto& r : records) {
    if (r.flag == 0) continue;
    const bool in_window = r.t >= schedule.t_start && r.t < schedule.t_stop;
    (in_window ? inside : outside) += 1;
  }
  if (T - delta > 0) m.fpe = static_cast<double>(outside) / (T - delta);
  if (delta > 0) {
    m.dr = static_cast<double>(inside) / delta;
    m.fne = 1.0 - *m.dr;
  }
  return m;
}

// Alarm rate over the steps where the realized disturbance is zero
// (includes honest gaps inside the scheduled window).
double nominal_step_fpe(const std::vector<DetectionRecord>& records, const AttackTrace& trace);

// ---- sweeps ---------------------------------------------------------------

struct SweepAxes {
  std::vector<double> alpha_bar;   // absolute working thresholds
  std::vector<double> kappa;       // multipliers of the scenario alpha (used when alpha_bar empty)
  std::vector<double> sigma_wbar;  // measurement-noise bound grid (scalar * I)
  std::vector<double> sigma_a;     // attack-noise bound grid (scalar * I)
  std::vector<int> W;
};

struct SweepRow {
  int W = 0;
  double sigma_wbar = 0;
  double sigma_a = 0;
  double alpha_bar = 0;
  double kappa = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::optional<double> fpe, dr, fne;
};

// Grid runs; the threshold axis is recounted over shared per-trial records,
// so FPE/FNE are exactly paired along it. Cells across the other axes run
// concurrently on independent streams keyed by cell index.
std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepAxes& axes, int trials,
                            bool with_attack);

// ---- theorem surfaces -----------------------------------------------------

struct SurfaceRow {
  double sigma_w = 0;
  int t = 0;
  double epsilon = 0;
  double exponent = 0;  // log(epsilon^2 / (k sigma_w M_bar)); -inf when vacuous
  double bound = 0;
  bool vacuous = false;
};

std::vector<SurfaceRow> fne_surface(const ScenarioConfig& base,
                                    const std::vector<double>& sigma_w_grid,
                                    const std::vector<int>& times);

// ---- detector comparison ----------------------------------------------------

struct ComparisonRow {
  std::string algorithm;
  int trial = 0;
  std::uint64_t seed = 0;
  std::optional<double> fpe, dr, fne;
  std::string note;  // calibration failures are reported here
};

// Per-trial metrics for AD-CPS and the CUSUM baseline on identical data.
// Trials use seeds run.seed, run.seed+1, ...
std::vector<ComparisonRow> compare_detectors(const ScenarioConfig& cfg, int trials);

// ---- honesty-violation study ------------------------------------------------

struct HonestyStudyRow {
  int trial = 0;
  std::uint64_t seed = 0;
  double fpe_attacked = 0;  // alarm rate over honest steps of the attacked run
  double fpe_nominal = 0;   // alarm rate of the never-attacked paired run
};

std::vector<HonestyStudyRow> honesty_violation_study(const ScenarioConfig& cfg, int trials);

// ---- calibration driver -----------------------------------------------------

struct CalibrationReport {
  double alpha = 0;  // base threshold the kappa grid scales
  double k_used = 0;
  KappaCalibration kappa;
  double cusum_nu = 0;
  CusumCalibration cusum;
};

CalibrationReport calibrate_scenario(const ScenarioConfig& cfg, double adcps_target_fpe,
                                     const std::vector<double>& kappa_grid,
                                     const std::vector<double>& h_grid, int runs);

}  // namespace adcps
