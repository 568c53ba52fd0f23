#include "adcps/linalg.hpp"

#include <cmath>
#include <cstdint>

#include "adcps/errors.hpp"
#include "adcps/rng.hpp"

namespace adcps {

double operator_norm(const Matrix& m, double tol, int max_iter) {
  if (m.size() == 0) return 0.0;
  // Rescale so the Gram matrix cannot overflow for large entries.
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if (!std::isfinite(scale)) return scale;
  const Matrix scaled = m / scale;
  const Matrix b = scaled.transpose() * scaled;
  const int n = static_cast<int>(b.rows());

  // Deterministic pseudo-random start; a fixed axis vector could be
  // orthogonal to the dominant eigenspace.
  RngStream rng(0x5EED5EED5EED5EEDULL, static_cast<std::uint64_t>(n));
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.next_gaussian();
  const double v0 = v.norm();
  if (v0 == 0.0) v.setOnes();
  v.normalize();

  double lambda = v.dot(b * v);
  for (int it = 0; it < max_iter; ++it) {
    Vector w = b * v;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    const double next = v.dot(b * v);
    const double change = std::abs(next - lambda);
    lambda = next;
    if (change <= tol * std::max(1.0, std::abs(next))) break;
  }
  return scale * std::sqrt(std::max(0.0, lambda));
}

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix psd_factor(const Matrix& s, double tol) {
  if (s.rows() != s.cols()) throw config_error("psd_factor: matrix must be square");
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw numerical_error("psd_factor: eigensolver failed");
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  Vector clipped = ev;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol * scale) throw config_error("psd_factor: matrix is not positive semidefinite");
    clipped[i] = std::max(0.0, ev[i]);
  }
  return es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
}

double min_symmetric_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  if (es.info() != Eigen::Success) throw numerical_error("min_symmetric_eigenvalue: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace adcps
