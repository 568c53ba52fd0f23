#pragma once

#include "adcps/linalg.hpp"
#include "adcps/system.hpp"

namespace adcps {

// Steady-state Kalman design for x_{t+1} = A x_t + B u_t + w, y = C x + wbar.
struct KalmanDesign {
  Matrix P;        // prediction error covariance, Riccati fixed point
  Matrix L;        // P Cᵀ (C P Cᵀ + Sigma_wbar)⁻¹
  Matrix Sigma_r;  // residual covariance C P Cᵀ + Sigma_wbar
  int dare_iterations = 0;
  double dare_residual = 0;
};

// Fixed-point iteration of the Riccati map from P0 = Sigma_w until the
// spectral-norm change between iterates drops below tol.
// Throws numerical_error when max_iter is exhausted or Sigma_r is singular.
KalmanDesign solve_dare(const Matrix& A, const Matrix& C, const Matrix& Sigma_w,
                        const Matrix& Sigma_wbar, double tol = 1e-10,
                        int max_iter = 100000);

struct FilterState {
  Vector x_hat;
  int t = 0;
};

struct FilterOutput {
  FilterState next;
  Vector residual;
};

// Predictor update: r = y - C x̂, x̂⁺ = A x̂ + B u + A L r.
FilterOutput filter_step(const KalmanDesign& design, const FilterState& state,
                         const Vector& y, const Vector& u, const SystemModel& sys);

// Infinite-horizon LQR gain K (for u = K x) with A + B K Schur stable.
// Throws numerical_error when the iteration does not converge or the
// resulting loop is not stable.
Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& Q_cost,
                const Matrix& R_cost, double tol = 1e-10, int max_iter = 100000);

}  // namespace adcps
