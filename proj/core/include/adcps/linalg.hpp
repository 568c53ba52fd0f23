#pragma once

#include <Eigen/Dense>

namespace adcps {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Largest singular value, computed by power iteration on MᵀM.
double operator_norm(const Matrix& m, double tol = 1e-12, int max_iter = 10000);

// Largest eigenvalue magnitude.
double spectral_radius(const Matrix& m);

// Factor F with F·Fᵀ = s for a symmetric positive-semidefinite s.
// Throws config_error when s has an eigenvalue below -tol (relative).
Matrix psd_factor(const Matrix& s, double tol = 1e-9);

// Smallest eigenvalue of a symmetric matrix.
double min_symmetric_eigenvalue(const Matrix& s);

bool all_finite(const Matrix& m);

}  // namespace adcps
