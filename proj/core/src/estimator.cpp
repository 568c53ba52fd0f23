#include "adcps/estimator.hpp"

#include <cmath>
#include <string>

#include "adcps/errors.hpp"

namespace adcps {

namespace {

Matrix riccati_map(const Matrix& A, const Matrix& C, const Matrix& Sigma_w,
                   const Matrix& Sigma_wbar, const Matrix& P) {
  const Matrix S = C * P * C.transpose() + Sigma_wbar;
  const Matrix gain = S.ldlt().solve(C * P);  // S⁻¹ C P
  return A * (P - P * C.transpose() * gain) * A.transpose() + Sigma_w;
}

}  // namespace

KalmanDesign solve_dare(const Matrix& A, const Matrix& C, const Matrix& Sigma_w,
                        const Matrix& Sigma_wbar, double tol, int max_iter) {
  const auto d = A.rows();
  if (A.cols() != d) throw config_error("solve_dare: A must be square");
  if (C.cols() != d) throw config_error("solve_dare: C column count must match A");
  if (Sigma_w.rows() != d || Sigma_w.cols() != d)
    throw config_error("solve_dare: Sigma_w must be d x d");
  if (Sigma_wbar.rows() != C.rows() || Sigma_wbar.cols() != C.rows())
    throw config_error("solve_dare: Sigma_wbar must be p x p");
  if (tol <= 0) throw config_error("solve_dare: tol must be positive");

  KalmanDesign design;
  Matrix P = Sigma_w;
  double change = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    Matrix next = riccati_map(A, C, Sigma_w, Sigma_wbar, P);
    if (!all_finite(next))
      throw numerical_error("solve_dare: iteration diverged at step " + std::to_string(it));
    change = operator_norm(next - P);
    P = std::move(next);
    if (change < tol) break;
  }
  if (it == max_iter)
    throw numerical_error("solve_dare: no convergence after " + std::to_string(max_iter) +
                          " iterations (last change " + std::to_string(change) + ")");

  design.P = 0.5 * (P + P.transpose());
  design.Sigma_r = C * design.P * C.transpose() + Sigma_wbar;
  if (min_symmetric_eigenvalue(design.Sigma_r) <= 0)
    throw numerical_error("solve_dare: residual covariance is not positive definite");
  design.L = design.Sigma_r.ldlt().solve(C * design.P).transpose();  // P Cᵀ Sigma_r⁻¹
  design.dare_iterations = it + 1;
  design.dare_residual = operator_norm(riccati_map(A, C, Sigma_w, Sigma_wbar, design.P) - design.P);
  return design;
}

FilterOutput filter_step(const KalmanDesign& design, const FilterState& state,
                         const Vector& y, const Vector& u, const SystemModel& sys) {
  FilterOutput out;
  out.residual = y - sys.C * state.x_hat;
  out.next.x_hat = sys.A * state.x_hat + sys.B * u + sys.A * design.L * out.residual;
  out.next.t = state.t + 1;
  return out;
}

Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& Q_cost,
                const Matrix& R_cost, double tol, int max_iter) {
  const auto d = A.rows();
  if (A.cols() != d) throw config_error("lqr_gain: A must be square");
  if (B.rows() != d) throw config_error("lqr_gain: B row count must match A");
  if (Q_cost.rows() != d || Q_cost.cols() != d) throw config_error("lqr_gain: Q must be d x d");
  if (R_cost.rows() != B.cols() || R_cost.cols() != B.cols())
    throw config_error("lqr_gain: R must be m x m");

  Matrix S = Q_cost;
  double change = 0;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Matrix BtS = B.transpose() * S;
    const Matrix G = R_cost + BtS * B;
    const Matrix gain = G.ldlt().solve(BtS * A);  // (R + BᵀSB)⁻¹ BᵀSA
    Matrix next = Q_cost + A.transpose() * S * A - A.transpose() * S * B * gain;
    next = 0.5 * (next + next.transpose());
    if (!all_finite(next))
      throw numerical_error("lqr_gain: iteration diverged at step " + std::to_string(it));
    change = operator_norm(next - S);
    S = std::move(next);
    if (change < tol) break;
  }
  if (it == max_iter)
    throw numerical_error("lqr_gain: no convergence after " + std::to_string(max_iter) +
                          " iterations (last change " + std::to_string(change) + ")");

  const Matrix BtS = B.transpose() * S;
  const Matrix G = R_cost + BtS * B;
  Matrix K = -G.ldlt().solve(BtS * A);
  if (spectral_radius(A + B * K) >= 1.0)
    throw numerical_error("lqr_gain: synthesized loop is not Schur stable");
  return K;
}

}  // namespace adcps
