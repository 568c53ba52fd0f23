#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "adcps/linalg.hpp"
#include "adcps/rng.hpp"

namespace adcps {

enum class CusumStatistic { chi_square, norm };

struct CusumConfig {
  double nu = 0;      // drift subtracted each step
  double h = 1;       // alarm level, > 0
  CusumStatistic statistic = CusumStatistic::chi_square;
  bool reset_on_alarm = true;
};

struct CusumState {
  double S = 0;  // cumulative statistic, clamped at 0
  int t = 0;
};

struct CusumStep {
  CusumState next;
  bool alarm = false;
  double statistic = 0;  // g_t before drift removal
  double S_compared = 0;  // the value tested against h (next.S resets on alarm)
};

// One-sided recursion S' = max(0, S + g_t - nu), alarm iff S' >= h.
// chi_square uses g = rᵀ Sigma_r⁻¹ r (Sigma_r must be positive definite),
// norm uses g = ||r||.
CusumStep cusum_step(const CusumConfig& cfg, const CusumState& state, const Vector& r,
                     const Matrix& Sigma_r);

// Streaming variant caching the Sigma_r factorization.
class CusumDetector {
 public:
  CusumDetector(CusumConfig cfg, const Matrix& Sigma_r);

  CusumStep step(const Vector& r);
  const CusumState& state() const { return state_; }
  void reset() { state_ = {}; }

 private:
  CusumConfig cfg_;
  Eigen::LDLT<Matrix> ldlt_;
  bool chi_square_;
  CusumState state_;
};

struct CusumCalibration {
  std::optional<double> h;
  std::vector<std::pair<double, double>> curve;  // (h, empirical fpe)
};

// Smallest grid h whose replayed nominal alarm rate is <= target. Each inner
// vector is one attack-free run of per-step statistics g_t; the recursion
// restarts at run boundaries.
CusumCalibration calibrate_cusum(const std::vector<std::vector<double>>& nominal_statistic_runs,
                                 double nu, double target_fpe, const std::vector<double>& h_grid,
                                 bool reset_on_alarm);

struct WatermarkedInput {
  Vector u;  // input with the watermark added
  Vector e;  // the injected watermark, recorded so the filter can use u + e
};

WatermarkedInput watermark_input(const Vector& u, const Matrix& watermark_cov, RngStream& rng);

}  // namespace adcps
