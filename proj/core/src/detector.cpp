#include "adcps/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adcps/errors.hpp"

namespace adcps {

Vector test_signal_state(const Vector& z_tm2, const Vector& z_tm1, const Vector& z_t,
                         const Matrix& A_K) {
  const Matrix eye = Matrix::Identity(A_K.rows(), A_K.cols());
  return 0.5 * (A_K * z_tm1) - 0.5 * z_t - 0.5 * ((A_K - eye) * z_tm2);
}

Vector test_signal_residual(const std::vector<Vector>& window) {
  if (window.size() < 2) throw config_error("test_signal_residual: window must hold >= 2 residuals");
  Vector mean = Vector::Zero(window.front().size());
  for (const Vector& r : window) mean += r;
  mean /= static_cast<double>(window.size());
  return mean - window.back();
}

double threshold_alpha(const DetectorConfig& cfg) {
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw config_error("threshold_alpha: delta must lie in (0,1)");
  if (cfg.sigma < 0) throw config_error("threshold_alpha: sigma must be nonnegative");
  if (cfg.dim <= 0) throw config_error("threshold_alpha: dim must be positive");
  if (cfg.k_constant <= 0) throw config_error("threshold_alpha: k must be positive");
  return (std::numbers::sqrt2 + std::sqrt(cfg.constants.M_bar)) *
         std::sqrt(cfg.k_constant * cfg.sigma * cfg.dim * std::log(1.0 / cfg.delta));
}

double working_threshold(const DetectorConfig& cfg) {
  if (cfg.kappa <= 0) throw config_error("working_threshold: kappa must be positive");
  return cfg.kappa * threshold_alpha(cfg);
}

DetectionRecord decide(int t, const Vector& test_signal, double threshold, DetectorMode mode) {
  DetectionRecord rec;
  rec.t = t;
  rec.test_norm = test_signal.norm();
  rec.threshold = threshold;
  rec.flag = rec.test_norm > threshold ? 1 : 0;
  rec.mode = mode;
  return rec;
}

StateDetector::StateDetector(Matrix A_K, DetectorConfig cfg)
    : A_K_(std::move(A_K)), cfg_(std::move(cfg)), threshold_(working_threshold(cfg_)) {}

std::optional<DetectionRecord> StateDetector::feed(const Vector& z) {
  std::optional<DetectionRecord> rec;
  if (t_ >= 2) {
    const Vector signal = test_signal_state(z_prev2_, z_prev1_, z, A_K_);
    rec = decide(t_, signal, threshold_, DetectorMode::full_state);
  }
  z_prev2_ = std::move(z_prev1_);
  z_prev1_ = z;
  ++t_;
  return rec;
}

ResidualDetector::ResidualDetector(DetectorConfig cfg)
    : cfg_(std::move(cfg)), threshold_(working_threshold(cfg_)) {
  if (cfg_.W < 2) throw config_error("ResidualDetector: window must be >= 2");
  ring_.resize(cfg_.W);
}

std::optional<DetectionRecord> ResidualDetector::feed(const Vector& r) {
  ring_[t_ % cfg_.W] = r;
  count_ = std::min(count_ + 1, cfg_.W);
  std::optional<DetectionRecord> rec;
  if (count_ == cfg_.W) {
    Vector mean = Vector::Zero(r.size());
    for (const Vector& q : ring_) mean += q;
    mean /= static_cast<double>(cfg_.W);
    rec = decide(t_, Vector(mean - r), threshold_, DetectorMode::residual);
  }
  ++t_;
  return rec;
}

KappaCalibration calibrate_kappa(const std::vector<double>& nominal_test_norms, double alpha,
                                 double target_fpe, const std::vector<double>& kappa_grid) {
  if (nominal_test_norms.empty()) throw config_error("calibrate_kappa: no nominal samples");
  if (alpha <= 0) throw config_error("calibrate_kappa: alpha must be positive");

  KappaCalibration out;
  std::vector<double> grid = kappa_grid;
  std::sort(grid.begin(), grid.end());
  for (double kappa : grid) {
    const double thr = kappa * alpha;
    std::size_t violations = 0;
    for (double n : nominal_test_norms)
      if (n > thr) ++violations;
    const double fpe = static_cast<double>(violations) / nominal_test_norms.size();
    out.curve.emplace_back(kappa, fpe);
    if (!out.kappa && fpe <= target_fpe) out.kappa = kappa;
  }
  return out;
}

double calibrate_k(std::vector<double> nominal_norms, double sigma, int dim, double delta) {
  if (nominal_norms.empty()) throw config_error("calibrate_k: no nominal samples");
  if (sigma <= 0) throw config_error("calibrate_k: sigma must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw config_error("calibrate_k: delta must lie in (0,1)");

  const std::size_t n = nominal_norms.size();
  std::size_t idx = static_cast<std::size_t>(std::ceil((1.0 - delta) * n));
  idx = std::min(std::max<std::size_t>(idx, 1), n) - 1;
  std::nth_element(nominal_norms.begin(), nominal_norms.begin() + idx, nominal_norms.end());
  const double q = nominal_norms[idx];
  return q * q / (sigma * dim * std::log(1.0 / delta));
}

std::optional<FpeBoundResult> fpe_bound(const std::optional<StabilityCertificate>& cert,
                                        const AnalysisConstants& constants, double delta,
                                        double k, double sigma_w, int dim, double x0_norm,
                                        int t) {
  if (!cert) return std::nullopt;
  if (t < 2) throw config_error("fpe_bound: t must be at least 2");
  const double denom = std::sqrt(2.0 * k * sigma_w * dim * std::log(1.0 / delta));
  if (denom <= 0) return std::nullopt;

  const double gamma = cert->gamma;
  const double beta = cert->beta;
  double sum = 0;
  for (int i = t - 1; i <= t; ++i) {
    double geo = 0;
    for (int j = 0; j <= i - 2; ++j) geo += std::pow(gamma, i - 2 - j);
    sum += std::pow(gamma, i - 1) * x0_norm + beta * geo;
  }

  FpeBoundResult out;
  out.value = delta + 2.0 * constants.h_bar * sum / denom;
  out.simplified = delta + 4.0 * constants.h_bar * beta / ((1.0 - gamma) * denom);
  return out;
}

double zeta_threshold(const AnalysisConstants& constants, std::span<const double> sigma_x,
                      double delta, double k, double sigma_w, int dim, int t, double alpha) {
  if (t < 2) throw config_error("zeta_threshold: t must be at least 2");
  if (static_cast<int>(sigma_x.size()) < t) throw config_error("zeta_threshold: sigma_x too short");
  const double log_term = std::log(1.0 / delta);
  double sum = 0;
  for (int i = t - 1; i <= t; ++i) {
    const double s = sigma_x[i - 1];
    sum += std::sqrt(dim * s) + std::sqrt(k * s * log_term);
  }
  return std::sqrt(dim * sigma_w * constants.M_bar) + constants.h_bar * sum + alpha;
}

FneBoundResult fne_bound(const AnalysisConstants& constants, std::span<const double> sigma_x,
                         double delta, double k, double sigma_w, int t) {
  if (t < 2) throw config_error("fne_bound: t must be at least 2");
  if (static_cast<int>(sigma_x.size()) < t) throw config_error("fne_bound: sigma_x too short");
  const double log_term = std::log(1.0 / delta);
  FneBoundResult out;
  for (int i = t - 1; i <= t; ++i)
    out.epsilon += 0.5 * constants.h_bar * std::sqrt(k * sigma_x[i - 1] * log_term);

  const double denom = k * sigma_w * constants.M_bar;
  if (out.epsilon <= 0) {
    out.vacuous = true;
    out.bound = 1.0 + 2.0 * delta;
  } else if (denom <= 0) {
    out.bound = 2.0 * delta;  // exp(-inf)
  } else {
    out.bound = std::exp(-out.epsilon * out.epsilon / denom) + 2.0 * delta;
  }
  return out;
}

}  // namespace adcps
