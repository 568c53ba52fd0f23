#pragma once

#include <vector>

#include "adcps/linalg.hpp"
#include "adcps/rng.hpp"
#include "adcps/system.hpp"

namespace testutil {

using adcps::Matrix;
using adcps::Vector;

inline Matrix random_matrix(adcps::RngStream& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.next_gaussian();
  return m;
}

// Dense random matrix rescaled to the requested operator norm (hence Schur
// stable whenever norm < 1).
inline Matrix random_stable_loop(adcps::RngStream& rng, int d, double norm) {
  Matrix m = random_matrix(rng, d, d);
  const double on = adcps::operator_norm(m);
  return on > 0 ? Matrix((norm / on) * m) : Matrix(norm * Matrix::Identity(d, d));
}

// Wraps a closed-loop matrix as a SystemModel with zero feedback, so the
// simulated loop is exactly A_K.
inline adcps::SystemModel system_from_loop(const Matrix& A_K) {
  const int d = static_cast<int>(A_K.rows());
  adcps::SystemModel sys;
  sys.A = A_K;
  sys.B = Matrix::Zero(d, 1);
  sys.C = Matrix::Identity(d, d);
  sys.K = Matrix::Zero(1, d);
  return sys;
}

inline Matrix random_psd(adcps::RngStream& rng, int d, double norm) {
  Matrix f = random_matrix(rng, d, d);
  Matrix s = f * f.transpose();
  const double on = adcps::operator_norm(s);
  if (on > 0) s *= norm / on;
  return s;
}

inline Matrix sample_covariance(const std::vector<Vector>& xs) {
  const int d = static_cast<int>(xs.front().size());
  Vector mean = Vector::Zero(d);
  for (const Vector& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Matrix cov = Matrix::Zero(d, d);
  for (const Vector& x : xs) cov += (x - mean) * (x - mean).transpose();
  return cov / static_cast<double>(xs.size() - 1);
}

// Independent oracle for the stationary covariance: the series
// sum_k A^k Q (A^k)ᵀ, truncated once terms are negligible.
inline Matrix lyapunov_series(const Matrix& a, const Matrix& q, double tol = 1e-14,
                              int max_terms = 100000) {
  Matrix sum = q;
  Matrix term = q;
  for (int k = 0; k < max_terms; ++k) {
    term = a * term * a.transpose();
    sum += term;
    if (adcps::operator_norm(term) < tol * adcps::operator_norm(sum)) break;
  }
  return sum;
}

// Standard error of the spectral norm of a sample covariance, estimated by
// batching the samples.
inline double cov_norm_stderr(const std::vector<Vector>& xs, int batches = 10) {
  const std::size_t per = xs.size() / batches;
  std::vector<double> norms;
  for (int b = 0; b < batches; ++b) {
    std::vector<Vector> chunk(xs.begin() + b * per, xs.begin() + (b + 1) * per);
    norms.push_back(adcps::operator_norm(sample_covariance(chunk)));
  }
  double mean = 0;
  for (double n : norms) mean += n;
  mean /= norms.size();
  double var = 0;
  for (double n : norms) var += (n - mean) * (n - mean);
  var /= (norms.size() - 1);
  return std::sqrt(var / norms.size());
}

}  // namespace testutil
