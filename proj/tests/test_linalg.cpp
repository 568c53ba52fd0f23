#include <cmath>

#include "adcps/errors.hpp"
#include "adcps/linalg.hpp"
#include "adcps/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using adcps::Matrix;
using adcps::operator_norm;
using adcps::psd_factor;
using adcps::spectral_radius;

TEST_CASE("operator norm of simple matrices") {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 2.0, -5.0, 0.5;
  CHECK(operator_norm(d) == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(operator_norm(Matrix::Zero(4, 4)) == 0.0);
  CHECK(operator_norm(Matrix::Identity(6, 6)) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("operator norm matches SVD on random matrices") {
  adcps::RngStream rng(11, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const int r = 1 + static_cast<int>(rng.next_unit() * 7);
    const int c = 1 + static_cast<int>(rng.next_unit() * 7);
    const Matrix m = testutil::random_matrix(rng, r, c);
    const double svd = Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
    CHECK(operator_norm(m) == doctest::Approx(svd).epsilon(1e-9));
  }
}

TEST_CASE("spectral radius") {
  Matrix t(2, 2);
  t << 0.5, 100.0, 0.0, -0.25;  // eigenvalues on the diagonal
  CHECK(spectral_radius(t) == doctest::Approx(0.5).epsilon(1e-12));

  Matrix rot(2, 2);  // rotation: complex pair of modulus 1
  rot << std::cos(1.0), -std::sin(1.0), std::sin(1.0), std::cos(1.0);
  CHECK(spectral_radius(rot) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("psd factor reconstructs the input") {
  adcps::RngStream rng(12, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = testutil::random_psd(rng, 4, 2.0);
    const Matrix f = psd_factor(s);
    CHECK(operator_norm(f * f.transpose() - s) < 1e-10);
  }
}

TEST_CASE("psd factor rejects indefinite matrices") {
  Matrix s(2, 2);
  s << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(psd_factor(s), adcps::config_error);
}
