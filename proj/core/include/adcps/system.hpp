#pragma once

#include <optional>
#include <vector>

#include "adcps/linalg.hpp"
#include "adcps/rng.hpp"

namespace adcps {

// Plant x_{t+1} = A x_t + B u_t + w_{t+1}, output map C, and state-feedback
// gain K applied as u_t = K x_t.
struct SystemModel {
  Matrix A;  // d x d
  Matrix B;  // d x m
  Matrix C;  // p x d
  Matrix K;  // m x d

  int d() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }
};

struct ClosedLoop {
  Matrix A_K;          // A + B·K
  double op_norm = 0;  // largest singular value
  double rho = 0;      // spectral radius
};

// Throws config_error when the matrix dimensions are inconsistent.
ClosedLoop make_closed_loop(const SystemModel& sys);

enum class NoiseKind { gaussian, uniform_box, truncated_gaussian };

// Zero-mean noise source with a certified upper bound on the covariance
// spectral norm. All three kinds are sub-Gaussian: the bounded kinds
// trivially, the gaussian kind by its moment generating function.
class NoiseModel {
 public:
  static NoiseModel gaussian(Matrix covariance);
  static NoiseModel uniform_box(Matrix covariance);
  static NoiseModel truncated_gaussian(Matrix covariance, double clip = 3.0);
  static NoiseModel zero(int dim);

  Vector sample(RngStream& rng) const;

  const Matrix& covariance() const { return covariance_; }
  double sigma_bound() const { return sigma_bound_; }
  // The bound may only be raised above the computed ||covariance||.
  void set_sigma_bound(double bound);
  NoiseKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(covariance_.rows()); }

 private:
  NoiseModel(NoiseKind kind, Matrix covariance, double clip);

  NoiseKind kind_;
  Matrix covariance_;
  Matrix factor_;  // F with F·Fᵀ = covariance
  double sigma_bound_ = 0;
  double clip_ = 3.0;
  double truncation_scale_ = 1.0;  // std of the clipped unit normal
};

struct Trajectory {
  std::vector<Vector> states;         // x_0 .. x_T
  std::vector<Vector> inputs;         // u_0 .. u_{T-1}
  std::vector<Vector> process_noise;  // w_1 .. w_T (entry i holds w_{i+1})
  std::vector<Vector> outputs;        // honest outputs C·x_t, pre-attack
  int horizon = 0;
};

// Closed-loop rollout with u_t = K x_t. Requires T >= 3 so the two-step
// test signal is defined somewhere.
Trajectory simulate(const SystemModel& sys, const NoiseModel& process_noise,
                    const Vector& x0, int T, RngStream& rng);

struct DoobParts {
  Vector martingale;   // m_t = w_{t-1} + w_t
  Vector predictable;  // p_t = (A_K - I)(x_{t-2} + x_{t-1})
  Vector base;         // x_{t-2}
};

// Two-step decomposition of x_t into martingale + predictable + base.
// Requires t >= 2; throws std::out_of_range otherwise.
DoobParts doob_decompose(const Trajectory& traj, int t, const Matrix& A_K);

// Constants derived from ||A_K|| and the process-noise bound sigma_w:
//   M        = 2 + 2||A_K|| + ||A_K||^2
//   M_bar    = 4 + M/4 + ||A_K||
//   sigma_dt = sigma_w * M
//   sigma_bar= sigma_w * M_bar
//   h_bar    = ||A_K - I|| * (||A_K|| + 2)
struct AnalysisConstants {
  double M = 0;
  double M_bar = 0;
  double sigma_dt = 0;
  double sigma_bar = 0;
  double h_bar = 0;
  double norm_Acl = 0;
};

AnalysisConstants analysis_constants(const Matrix& A_K, double sigma_w);

// Norm-recursion bound on ||Cov(x_t)||: with Abar_0 = I, c_0 = 0,
//   Abar_t = Abar_{t-1} A_K,  c_t = c_{t-1} + ||Abar_{t-1}||^2,
//   sigma_{x_t} = sigma0 ||Abar_t||^2 + sigma_w c_t.
// Returns sigma_{x_0..t}.
std::vector<double> state_cov_bound(const Matrix& A_K, double sigma0,
                                    double sigma_w, int t);

// Drift-condition constants:
//   gamma    = (1/2) sqrt(lambda_min(A_Kᵀ A_K))
//   K_radius = sqrt(2 trace(Sigma_w)) / gamma
//   beta     = ||A_K|| * K_radius + sqrt(trace(Sigma_w))
struct StabilityCertificate {
  double gamma = 0;
  double K_radius = 0;
  double beta = 0;
};

// Available only when lambda_max(A_Kᵀ A_K) < 1 and gamma > 0; returns
// nullopt when the sufficient conditions do not hold.
std::optional<StabilityCertificate> stability_certificate(const Matrix& A_K,
                                                          const Matrix& Sigma_w);

}  // namespace adcps
