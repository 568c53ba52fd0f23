#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adcps/linalg.hpp"
#include "adcps/system.hpp"

namespace adcps {

enum class DetectorMode { full_state, residual };

// Conservative concentration constant (the certified fallback when no
// nominal data is available for calibration).
constexpr double certified_k() { return 6401.0; }

struct DetectorConfig {
  double delta = 0.01;    // tail mass, in (0,1)
  double k_constant = 1;  // concentration constant
  double kappa = 1;       // threshold tuning gain
  int W = 2;              // window size, >= 2
  int dim = 0;            // dimension of the tested signal
  double sigma = 0;       // noise-scale bound entering the threshold
  AnalysisConstants constants;
  DetectorMode mode = DetectorMode::full_state;
};

struct DetectionRecord {
  int t = 0;
  double test_norm = 0;
  double threshold = 0;  // working threshold the norm was compared against
  int flag = 0;          // 1 = declared corrupt
  DetectorMode mode = DetectorMode::full_state;
};

// Two-step test on raw measurements:
//   T_t = (1/2) A_K z_{t-1} - (1/2) z_t - (1/2)(A_K - I) z_{t-2}.
Vector test_signal_state(const Vector& z_tm2, const Vector& z_tm1, const Vector& z_t,
                         const Matrix& A_K);

// Windowed residual test: mean of the window minus its last element,
//   T_t = (1/W) sum_{i=t-W+1..t} r_i - r_t.
// The window must hold at least two residuals, newest last.
Vector test_signal_residual(const std::vector<Vector>& window);

// alpha = (sqrt(2) + sqrt(M_bar)) * sqrt(k * sigma * dim * ln(1/delta)).
double threshold_alpha(const DetectorConfig& cfg);

// kappa * alpha.
double working_threshold(const DetectorConfig& cfg);

// flag = 1 iff ||T_t|| strictly exceeds the threshold; a tie is honest.
DetectionRecord decide(int t, const Vector& test_signal, double threshold,
                       DetectorMode mode);

// Streaming full-state detector (decisions start at t = 2).
class StateDetector {
 public:
  StateDetector(Matrix A_K, DetectorConfig cfg);

  std::optional<DetectionRecord> feed(const Vector& z);
  double threshold() const { return threshold_; }
  int time() const { return t_; }

 private:
  Matrix A_K_;
  DetectorConfig cfg_;
  double threshold_;
  Vector z_prev1_, z_prev2_;
  int t_ = 0;
};

// Streaming residual detector over a ring of the last W residuals;
// no decision is emitted until the window fills.
class ResidualDetector {
 public:
  explicit ResidualDetector(DetectorConfig cfg);

  std::optional<DetectionRecord> feed(const Vector& r);
  double threshold() const { return threshold_; }
  int time() const { return t_; }

 private:
  DetectorConfig cfg_;
  double threshold_;
  std::vector<Vector> ring_;
  int count_ = 0;
  int t_ = 0;
};

struct KappaCalibration {
  std::optional<double> kappa;                   // absent when no grid point meets the target
  std::vector<std::pair<double, double>> curve;  // (kappa, empirical fpe)
};

// Smallest grid kappa whose nominal false-positive rate is <= target.
KappaCalibration calibrate_kappa(const std::vector<double>& nominal_test_norms, double alpha,
                                 double target_fpe, const std::vector<double>& kappa_grid);

// k such that the empirical (1-delta) quantile of the nominal norms equals
// sqrt(k * sigma * dim * ln(1/delta)).
double calibrate_k(std::vector<double> nominal_norms, double sigma, int dim, double delta);

// False-positive bound at time t for a system with a stability certificate:
//   value      = delta + 2 h_bar * S_t / sqrt(2 k sigma_w d ln(1/delta)),
//     S_t = sum_{i=t-1..t} (gamma^{i-1} ||x0|| + beta * sum_{j=0..i-2} gamma^{i-2-j})
//   simplified = delta + 4 h_bar beta / ((1-gamma) sqrt(2 k sigma_w d ln(1/delta)))
// (the x0 = 0 large-t form). Returns nullopt without a certificate.
struct FpeBoundResult {
  double value = 0;
  double simplified = 0;
};

std::optional<FpeBoundResult> fpe_bound(const std::optional<StabilityCertificate>& cert,
                                        const AnalysisConstants& constants, double delta,
                                        double k, double sigma_w, int dim, double x0_norm,
                                        int t);

// Minimum attack energy for which the miss-rate bound applies:
//   zeta_bar_t = sqrt(d sigma_w M_bar)
//              + h_bar * sum_{i=t-1..t} (sqrt(d sigma_x[i-1]) + sqrt(k sigma_x[i-1] ln(1/delta)))
//              + alpha.
double zeta_threshold(const AnalysisConstants& constants, std::span<const double> sigma_x,
                      double delta, double k, double sigma_w, int dim, int t, double alpha);

// Miss-rate bound:
//   epsilon = (h_bar/2) * sum_{i=t-1..t} sqrt(k sigma_x[i-1] ln(1/delta))
//   bound   = exp(-epsilon^2 / (k sigma_w M_bar)) + 2 delta.
// vacuous marks the degenerate epsilon = 0 case (bound 1 + 2 delta).
struct FneBoundResult {
  double epsilon = 0;
  double bound = 0;
  bool vacuous = false;
};

FneBoundResult fne_bound(const AnalysisConstants& constants, std::span<const double> sigma_x,
                         double delta, double k, double sigma_w, int t);

}  // namespace adcps
