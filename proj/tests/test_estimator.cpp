#include <cmath>
#include <vector>

#include "adcps/errors.hpp"
#include "adcps/estimator.hpp"
#include "adcps/plants.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace adcps;

namespace {

// Test-local Riccati map, kept independent of the solver under test.
Matrix riccati_oracle(const Matrix& A, const Matrix& C, const Matrix& Q, const Matrix& R,
                      const Matrix& P) {
  const Matrix S = C * P * C.transpose() + R;
  return A * (P - P * C.transpose() * S.inverse() * C * P) * A.transpose() + Q;
}

}  // namespace

TEST_CASE("dare: scalar one-step fixed point") {
  Matrix a(1, 1), c(1, 1), q(1, 1), r(1, 1);
  a << 0.0;
  c << 1.0;
  q << 0.7;
  r << 0.3;
  const KalmanDesign design = solve_dare(a, c, q, r);
  CHECK(design.P(0, 0) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(design.L(0, 0) == doctest::Approx(0.7 / (0.7 + 0.3)).epsilon(1e-12));
  CHECK(design.Sigma_r(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dare: zero dynamics converge in one iteration") {
  const Matrix q = 0.4 * Matrix::Identity(3, 3);
  const KalmanDesign design =
      solve_dare(Matrix::Zero(3, 3), Matrix::Identity(3, 3), q, 0.1 * Matrix::Identity(3, 3));
  CHECK(design.dare_iterations == 1);
  CHECK(operator_norm(design.P - q) < 1e-12);
}

TEST_CASE("dare: cart-pole fixed point verified by substitution") {
  const SystemModel sys = inverted_pendulum_cart();
  const Matrix q = 0.001 * Matrix::Identity(4, 4);
  const Matrix r = 0.01 * Matrix::Identity(4, 4);
  const KalmanDesign design = solve_dare(sys.A, sys.C, q, r);
  CHECK(operator_norm(riccati_oracle(sys.A, sys.C, q, r, design.P) - design.P) < 1e-9);
  CHECK(design.dare_residual < 1e-9);
  CHECK(min_symmetric_eigenvalue(design.Sigma_r) > 0.0);
}

TEST_CASE("dare: undetectable pair fails with a diagnostic") {
  Matrix a(1, 1), c(1, 1), q(1, 1), r(1, 1);
  a << 2.0;
  c << 0.0;  // measurements carry no state information
  q << 1.0;
  r << 1.0;
  CHECK_THROWS_AS(solve_dare(a, c, q, r, 1e-10, 2000), numerical_error);
}

TEST_CASE("filter step: perfect prediction gives zero residual") {
  const SystemModel sys = inverted_pendulum_cart();
  KalmanDesign design;
  design.L = 0.1 * Matrix::Identity(4, 4);
  FilterState state{Vector::Ones(4), 3};
  const Vector y = sys.C * state.x_hat;
  const Vector u = Vector::Zero(1);
  const FilterOutput out = filter_step(design, state, y, u, sys);
  CHECK(out.residual.norm() == 0.0);
  CHECK((out.next.x_hat - sys.A * state.x_hat).norm() < 1e-15);
  CHECK(out.next.t == 4);
}

TEST_CASE("filter step: zero gain ignores measurements") {
  const SystemModel sys = inverted_pendulum_cart();
  KalmanDesign design;
  design.L = Matrix::Zero(4, 4);
  FilterState state{Vector::Ones(4), 0};
  Vector y = Vector::Constant(4, 100.0);
  const FilterOutput out = filter_step(design, state, y, Vector::Zero(1), sys);
  CHECK((out.next.x_hat - sys.A * state.x_hat).norm() < 1e-15);
}

TEST_CASE("filter: nominal residuals are white with covariance Sigma_r") {
  const SystemModel base = inverted_pendulum_cart();
  SystemModel sys = base;
  sys.K = lqr_gain(sys.A, sys.B, Matrix::Identity(4, 4), Matrix::Identity(1, 1));
  const Matrix sigma_w = 0.001 * Matrix::Identity(4, 4);
  const Matrix sigma_wbar = 0.01 * Matrix::Identity(4, 4);
  const KalmanDesign design = solve_dare(sys.A, sys.C, sigma_w, sigma_wbar);

  const NoiseModel w = NoiseModel::gaussian(sigma_w);
  const NoiseModel wbar = NoiseModel::gaussian(sigma_wbar);
  RngStream rng_w(414, 1), rng_wbar(414, 2);

  const int T = 40000;
  std::vector<Vector> residuals;
  residuals.reserve(T);
  Vector x = Vector::Zero(4);
  FilterState fs{Vector::Zero(4), 0};
  for (int t = 0; t < T; ++t) {
    const Vector y = sys.C * x + wbar.sample(rng_wbar);
    const Vector u = sys.K * fs.x_hat;
    const FilterOutput out = filter_step(design, fs, y, u, sys);
    residuals.push_back(out.residual);
    x = sys.A * x + sys.B * u + w.sample(rng_w);
    fs = out.next;
  }
  residuals.erase(residuals.begin(), residuals.begin() + 200);  // transient

  const Matrix cov = testutil::sample_covariance(residuals);
  CHECK(operator_norm(cov - design.Sigma_r) < 0.1 * operator_norm(design.Sigma_r));

  // Mean near zero and lag-1 autocorrelation vanishing per coordinate.
  Vector mean = Vector::Zero(4);
  for (const Vector& r : residuals) mean += r;
  mean /= static_cast<double>(residuals.size());
  for (int i = 0; i < 4; ++i) {
    const double sd = std::sqrt(cov(i, i));
    CHECK(std::abs(mean(i)) < 4.0 * sd / std::sqrt(static_cast<double>(residuals.size())));
    double num = 0, den = 0;
    for (std::size_t t = 0; t + 1 < residuals.size(); ++t) {
      num += (residuals[t](i) - mean(i)) * (residuals[t + 1](i) - mean(i));
      den += (residuals[t](i) - mean(i)) * (residuals[t](i) - mean(i));
    }
    CHECK(std::abs(num / den) < 5.0 / std::sqrt(static_cast<double>(residuals.size())));
  }
}

TEST_CASE("lqr: zero dynamics need no feedback") {
  const Matrix k = lqr_gain(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                            Matrix::Identity(2, 2));
  CHECK(operator_norm(k) < 1e-12);
}

TEST_CASE("lqr: scalar closed loop matches the Riccati root") {
  Matrix a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 2.0;
  b << 1.0;
  q << 1.0;
  r << 1.0;
  const Matrix k = lqr_gain(a, b, q, r);
  // s^2 - 4s - 1 = 0 gives s = 2 + sqrt(5); the loop is 2/(1+s).
  const double s = 2.0 + std::sqrt(5.0);
  const double loop = a(0, 0) + b(0, 0) * k(0, 0);
  CHECK(std::abs(loop) < 1.0);
  CHECK(loop == doctest::Approx(2.0 / (1.0 + s)).epsilon(1e-9));
}

TEST_CASE("lqr: stabilizes the cart-pole plant") {
  const SystemModel sys = inverted_pendulum_cart();
  const Matrix k = lqr_gain(sys.A, sys.B, Matrix::Identity(4, 4), Matrix::Identity(1, 1));
  const double rho =
      Eigen::EigenSolver<Matrix>(sys.A + sys.B * k).eigenvalues().cwiseAbs().maxCoeff();
  CHECK(rho < 1.0);
}
