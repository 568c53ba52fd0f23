#include "adcps/system.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adcps/errors.hpp"

namespace adcps {

namespace {

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

}  // namespace

ClosedLoop make_closed_loop(const SystemModel& sys) {
  const auto d = sys.A.rows();
  if (sys.A.cols() != d) throw config_error("make_closed_loop: A must be square");
  if (sys.B.rows() != d) throw config_error("make_closed_loop: B row count must match A");
  if (sys.K.rows() != sys.B.cols() || sys.K.cols() != d)
    throw config_error("make_closed_loop: K must be m x d");
  if (sys.C.size() != 0 && sys.C.cols() != d)
    throw config_error("make_closed_loop: C column count must match A");

  ClosedLoop loop;
  loop.A_K = sys.A + sys.B * sys.K;
  if (!all_finite(loop.A_K)) throw config_error("make_closed_loop: A + B*K has non-finite entries");
  loop.op_norm = operator_norm(loop.A_K);
  loop.rho = spectral_radius(loop.A_K);
  return loop;
}

NoiseModel::NoiseModel(NoiseKind kind, Matrix covariance, double clip)
    : kind_(kind), covariance_(std::move(covariance)), clip_(clip) {
  if (covariance_.rows() != covariance_.cols())
    throw config_error("NoiseModel: covariance must be square");
  if (!all_finite(covariance_)) throw config_error("NoiseModel: covariance has non-finite entries");
  factor_ = psd_factor(covariance_);
  sigma_bound_ = operator_norm(covariance_);
  if (kind_ == NoiseKind::truncated_gaussian) {
    if (clip_ <= 0) throw config_error("NoiseModel: clip must be positive");
    // Variance of the unit normal clipped to [-c, c].
    const double z = 2.0 * std_normal_cdf(clip_) - 1.0;
    truncation_scale_ = std::sqrt(1.0 - 2.0 * clip_ * std_normal_pdf(clip_) / z);
  }
}

NoiseModel NoiseModel::gaussian(Matrix covariance) {
  return NoiseModel(NoiseKind::gaussian, std::move(covariance), 0.0);
}

NoiseModel NoiseModel::uniform_box(Matrix covariance) {
  return NoiseModel(NoiseKind::uniform_box, std::move(covariance), 0.0);
}

NoiseModel NoiseModel::truncated_gaussian(Matrix covariance, double clip) {
  return NoiseModel(NoiseKind::truncated_gaussian, std::move(covariance), clip);
}

NoiseModel NoiseModel::zero(int dim) {
  return NoiseModel(NoiseKind::gaussian, Matrix::Zero(dim, dim), 0.0);
}

void NoiseModel::set_sigma_bound(double bound) {
  const double floor = operator_norm(covariance_);
  if (bound < floor * (1.0 - 1e-12))
    throw config_error("NoiseModel: sigma bound below ||covariance||");
  sigma_bound_ = bound;
}

Vector NoiseModel::sample(RngStream& rng) const {
  const int n = dim();
  Vector u(n);
  switch (kind_) {
    case NoiseKind::gaussian:
      for (int i = 0; i < n; ++i) u[i] = rng.next_gaussian();
      break;
    case NoiseKind::uniform_box:
      // Uniform on [-sqrt(3), sqrt(3)] has unit variance.
      for (int i = 0; i < n; ++i) u[i] = (2.0 * rng.next_unit() - 1.0) * std::numbers::sqrt3;
      break;
    case NoiseKind::truncated_gaussian:
      for (int i = 0; i < n; ++i) {
        double g = rng.next_gaussian();
        while (std::abs(g) > clip_) g = rng.next_gaussian();
        u[i] = g / truncation_scale_;
      }
      break;
  }
  return factor_ * u;
}

Trajectory simulate(const SystemModel& sys, const NoiseModel& process_noise,
                    const Vector& x0, int T, RngStream& rng) {
  if (T < 3) throw config_error("simulate: horizon must be at least 3");
  if (x0.size() != sys.d()) throw config_error("simulate: x0 dimension mismatch");
  if (process_noise.dim() != sys.d())
    throw config_error("simulate: process noise dimension mismatch");
  const ClosedLoop loop = make_closed_loop(sys);  // validates dimensions
  (void)loop;

  Trajectory tr;
  tr.horizon = T;
  tr.states.reserve(T + 1);
  tr.inputs.reserve(T);
  tr.process_noise.reserve(T);
  tr.outputs.reserve(T + 1);

  Vector x = x0;
  tr.states.push_back(x);
  for (int t = 0; t < T; ++t) {
    Vector u = sys.K * x;
    Vector w = process_noise.sample(rng);
    x = sys.A * x + sys.B * u + w;
    tr.inputs.push_back(std::move(u));
    tr.process_noise.push_back(std::move(w));
    tr.states.push_back(x);
  }
  const bool c_is_identity =
      sys.C.rows() == sys.C.cols() && sys.C.isIdentity(0.0);
  for (const Vector& s : tr.states)
    tr.outputs.push_back(c_is_identity ? s : Vector(sys.C * s));
  return tr;
}

DoobParts doob_decompose(const Trajectory& traj, int t, const Matrix& A_K) {
  if (t < 2) throw std::out_of_range("doob_decompose: t must be at least 2");
  if (t > traj.horizon) throw std::out_of_range("doob_decompose: t beyond horizon");
  DoobParts parts;
  parts.martingale = traj.process_noise[t - 2] + traj.process_noise[t - 1];
  parts.predictable =
      (A_K - Matrix::Identity(A_K.rows(), A_K.cols())) * (traj.states[t - 2] + traj.states[t - 1]);
  parts.base = traj.states[t - 2];
  return parts;
}

AnalysisConstants analysis_constants(const Matrix& A_K, double sigma_w) {
  if (sigma_w < 0) throw config_error("analysis_constants: sigma_w must be nonnegative");
  AnalysisConstants c;
  c.norm_Acl = operator_norm(A_K);
  c.M = 2.0 + 2.0 * c.norm_Acl + c.norm_Acl * c.norm_Acl;
  c.M_bar = 4.0 + c.M / 4.0 + c.norm_Acl;
  c.sigma_dt = sigma_w * c.M;
  c.sigma_bar = sigma_w * c.M_bar;
  c.h_bar = operator_norm(A_K - Matrix::Identity(A_K.rows(), A_K.cols())) * (c.norm_Acl + 2.0);
  if (!std::isfinite(c.M) || !std::isfinite(c.h_bar))
    throw numerical_error("analysis_constants: non-finite result");
  return c;
}

std::vector<double> state_cov_bound(const Matrix& A_K, double sigma0, double sigma_w, int t) {
  if (t < 0) throw config_error("state_cov_bound: t must be nonnegative");
  std::vector<double> out;
  out.reserve(t + 1);
  out.push_back(sigma0);
  Matrix abar = Matrix::Identity(A_K.rows(), A_K.cols());
  double c = 0.0;
  for (int s = 1; s <= t; ++s) {
    const double prev_norm = operator_norm(abar);
    c += prev_norm * prev_norm;
    abar = abar * A_K;
    const double cur_norm = operator_norm(abar);
    out.push_back(sigma0 * cur_norm * cur_norm + sigma_w * c);
  }
  return out;
}

std::optional<StabilityCertificate> stability_certificate(const Matrix& A_K,
                                                          const Matrix& Sigma_w) {
  if (Sigma_w.rows() != A_K.rows() || Sigma_w.cols() != A_K.cols())
    throw config_error("stability_certificate: Sigma_w dimension mismatch");
  const Matrix gram = A_K.transpose() * A_K;
  const double op = operator_norm(A_K);
  if (op * op >= 1.0) return std::nullopt;  // lambda_max(A_Kᵀ A_K) >= 1
  const double lambda_min = std::max(0.0, min_symmetric_eigenvalue(gram));
  const double gamma = 0.5 * std::sqrt(lambda_min);
  if (gamma <= 0.0) return std::nullopt;  // compact set would be unbounded

  StabilityCertificate cert;
  cert.gamma = gamma;
  cert.K_radius = std::sqrt(2.0 * Sigma_w.trace()) / gamma;
  // The maximum of ||A_K x|| over the ball is attained along the top
  // singular direction at the boundary.
  cert.beta = op * cert.K_radius + std::sqrt(Sigma_w.trace());
  return cert;
}

}  // namespace adcps
