#include "adcps/attack.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "adcps/errors.hpp"

namespace adcps {

AttackTrace no_attack(int p, int T) {
  AttackTrace trace;
  trace.v.assign(T + 1, Vector::Zero(p));
  trace.schedule = {0, 0};
  trace.kind = AttackKind::none;
  return trace;
}

Vector deception_step(const DeceptionParams& params, const Vector& v_prev, RngStream& rng) {
  const int p = static_cast<int>(params.A_a.rows());
  Vector innovation;
  if (params.Sigma_a.size() == 0 || params.Sigma_a.isZero(0.0)) {
    innovation = Vector::Zero(p);
  } else {
    const Matrix factor = psd_factor(params.Sigma_a);
    Vector g(p);
    for (int i = 0; i < p; ++i) g[i] = rng.next_gaussian();
    innovation = factor * g;
  }
  return params.A_a * v_prev + innovation;
}

AttackTrace make_deception_trace(const DeceptionParams& params, const AttackSchedule& schedule,
                                 int p, int T, RngStream& rng, int on_len, int off_len) {
  if (schedule.t_start < 0 || schedule.t_stop > T + 1 || schedule.t_start >= schedule.t_stop)
    throw config_error("make_deception_trace: bad schedule window");
  if (params.A_a.rows() != p || params.A_a.cols() != p)
    throw config_error("make_deception_trace: A_a must be p x p");

  AttackTrace trace = no_attack(p, T);
  trace.schedule = schedule;
  trace.kind = AttackKind::deception;

  const Matrix factor =
      params.Sigma_a.isZero(0.0) ? Matrix::Zero(p, p) : psd_factor(params.Sigma_a);
  const bool intermittent = on_len > 0 && off_len > 0;
  Vector v = Vector::Zero(p);
  int phase = 0;
  bool active = true;
  for (int t = schedule.t_start; t < schedule.t_stop; ++t) {
    if (intermittent && phase == 0) active = true;
    if (intermittent && phase == on_len) {
      active = false;
      v.setZero();  // burst ends; the AR state restarts at the next burst
    }
    if (active) {
      Vector g(p);
      for (int i = 0; i < p; ++i) g[i] = rng.next_gaussian();
      v = params.A_a * v + factor * g;
      trace.v[t] = v;
    }
    if (intermittent && ++phase == on_len + off_len) phase = 0;
  }
  return trace;
}

std::vector<Vector> apply_attack(const std::vector<Vector>& outputs, const AttackTrace& trace) {
  if (outputs.size() != trace.v.size())
    throw data_error("apply_attack: output and trace lengths differ");
  std::vector<Vector> z;
  z.reserve(outputs.size());
  for (std::size_t t = 0; t < outputs.size(); ++t) z.push_back(outputs[t] + trace.v[t]);
  return z;
}

bool is_w_step_honest(const AttackTrace& trace, int t, int W) {
  if (t < W) throw std::out_of_range("is_w_step_honest: t must be at least W");
  for (int s = t - W; s < t; ++s) {
    if (s < static_cast<int>(trace.v.size()) && !trace.v[s].isZero(0.0)) return false;
  }
  return true;
}

Vector cumulative_adversarial_input(const AttackTrace& trace, const Matrix& A_K, int t) {
  if (t < 2) throw std::out_of_range("cumulative_adversarial_input: t must be at least 2");
  if (t >= static_cast<int>(trace.v.size()))
    throw std::out_of_range("cumulative_adversarial_input: t beyond trace");
  if (trace.v[t].size() != A_K.rows())
    throw config_error("cumulative_adversarial_input: disturbance dimension must match A_K");
  const Matrix eye = Matrix::Identity(A_K.rows(), A_K.cols());
  return 0.5 * (A_K * trace.v[t - 1] + trace.v[t]) - trace.v[t] -
         0.5 * (A_K - eye) * trace.v[t - 2];
}

AttackTrace make_min_energy_spikes(const std::function<double(int)>& energy_floor,
                                   const AttackSchedule& schedule, const Vector& direction,
                                   int T, double margin, int gap) {
  if (gap < 3) throw config_error("make_min_energy_spikes: gap must be at least 3");
  if (margin <= 0) throw config_error("make_min_energy_spikes: margin must be positive");
  const double dn = direction.norm();
  if (dn == 0.0) throw config_error("make_min_energy_spikes: direction must be nonzero");
  const Vector unit = direction / dn;

  AttackTrace trace = no_attack(static_cast<int>(direction.size()), T);
  trace.schedule = schedule;
  trace.kind = AttackKind::custom_sequence;
  const int first = std::max(schedule.t_start, 2);
  for (int t = first; t < schedule.t_stop && t <= T; t += gap) {
    // With two honest steps behind it, the spike contributes -v_t/2.
    trace.v[t] = 2.0 * margin * energy_floor(t) * unit;
  }
  return trace;
}

AttackTrace load_attack_csv(const std::string& path, int p, int T) {
  std::ifstream in(path);
  if (!in) throw config_error("load_attack_csv: cannot open " + path);
  AttackTrace trace = no_attack(p, T);
  trace.kind = AttackKind::custom_sequence;

  int lo = T + 1, hi = -1;
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first_line) {
      first_line = false;
      if (line.find_first_not_of("0123456789+-., \teE") != std::string::npos) continue;  // header
    }
    std::istringstream row(line);
    std::string cell;
    if (!std::getline(row, cell, ',')) throw data_error("load_attack_csv: malformed row");
    int t = 0;
    try {
      t = std::stoi(cell);
    } catch (const std::exception&) {
      throw data_error("load_attack_csv: bad time index '" + cell + "'");
    }
    if (t < 0 || t > T) continue;
    Vector v(p);
    for (int i = 0; i < p; ++i) {
      if (!std::getline(row, cell, ','))
        throw data_error("load_attack_csv: row has fewer than p values");
      try {
        v[i] = std::stod(cell);
      } catch (const std::exception&) {
        throw data_error("load_attack_csv: bad value '" + cell + "'");
      }
    }
    trace.v[t] = v;
    if (!v.isZero(0.0)) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  trace.schedule = (hi >= 0) ? AttackSchedule{lo, hi + 1} : AttackSchedule{0, 0};
  return trace;
}

}  // namespace adcps
