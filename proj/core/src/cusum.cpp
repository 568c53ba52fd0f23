#include "adcps/cusum.hpp"

#include <algorithm>
#include <cmath>

#include "adcps/errors.hpp"

namespace adcps {

namespace {

void validate(const CusumConfig& cfg) {
  if (cfg.h <= 0) throw config_error("cusum: alarm level h must be positive");
  if (cfg.nu < 0) throw config_error("cusum: drift nu must be nonnegative");
}

CusumStep advance(const CusumConfig& cfg, const CusumState& state, double g) {
  CusumStep out;
  out.statistic = g;
  out.next.S = std::max(0.0, state.S + g - cfg.nu);
  out.next.t = state.t + 1;
  out.S_compared = out.next.S;
  out.alarm = out.next.S >= cfg.h;
  if (out.alarm && cfg.reset_on_alarm) out.next.S = 0;
  return out;
}

}  // namespace

CusumStep cusum_step(const CusumConfig& cfg, const CusumState& state, const Vector& r,
                     const Matrix& Sigma_r) {
  validate(cfg);
  double g = 0;
  if (cfg.statistic == CusumStatistic::chi_square) {
    if (min_symmetric_eigenvalue(Sigma_r) <= 0)
      throw config_error("cusum_step: Sigma_r must be positive definite");
    g = r.dot(Sigma_r.ldlt().solve(r));
  } else {
    g = r.norm();
  }
  return advance(cfg, state, g);
}

CusumDetector::CusumDetector(CusumConfig cfg, const Matrix& Sigma_r)
    : cfg_(cfg), chi_square_(cfg.statistic == CusumStatistic::chi_square) {
  validate(cfg_);
  if (chi_square_) {
    if (min_symmetric_eigenvalue(Sigma_r) <= 0)
      throw config_error("CusumDetector: Sigma_r must be positive definite");
    ldlt_.compute(Sigma_r);
  }
}

CusumStep CusumDetector::step(const Vector& r) {
  const double g = chi_square_ ? r.dot(ldlt_.solve(r)) : r.norm();
  CusumStep out = advance(cfg_, state_, g);
  state_ = out.next;
  return out;
}

CusumCalibration calibrate_cusum(const std::vector<std::vector<double>>& nominal_statistic_runs,
                                 double nu, double target_fpe, const std::vector<double>& h_grid,
                                 bool reset_on_alarm) {
  std::size_t total = 0;
  for (const auto& run : nominal_statistic_runs) total += run.size();
  if (total == 0) throw config_error("calibrate_cusum: no nominal samples");

  CusumCalibration out;
  std::vector<double> grid = h_grid;
  std::sort(grid.begin(), grid.end());
  for (double h : grid) {
    if (h <= 0) throw config_error("calibrate_cusum: h grid must be positive");
    std::size_t alarms = 0;
    for (const auto& run : nominal_statistic_runs) {
      double S = 0;
      for (double g : run) {
        S = std::max(0.0, S + g - nu);
        if (S >= h) {
          ++alarms;
          if (reset_on_alarm) S = 0;
        }
      }
    }
    const double fpe = static_cast<double>(alarms) / total;
    out.curve.emplace_back(h, fpe);
    if (!out.h && fpe <= target_fpe) out.h = h;
  }
  return out;
}

WatermarkedInput watermark_input(const Vector& u, const Matrix& watermark_cov, RngStream& rng) {
  if (watermark_cov.rows() != u.size() || watermark_cov.cols() != u.size())
    throw config_error("watermark_input: covariance dimension must match the input");
  WatermarkedInput out;
  if (watermark_cov.isZero(0.0)) {
    out.e = Vector::Zero(u.size());
    out.u = u;
    return out;
  }
  const Matrix factor = psd_factor(watermark_cov);
  Vector g(u.size());
  for (int i = 0; i < u.size(); ++i) g[i] = rng.next_gaussian();
  out.e = factor * g;
  out.u = u + out.e;
  return out;
}

}  // namespace adcps
