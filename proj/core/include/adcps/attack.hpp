#pragma once

#include <functional>
#include <string>
#include <vector>

#include "adcps/linalg.hpp"
#include "adcps/rng.hpp"

namespace adcps {

enum class AttackKind { none, deception, replay_file, custom_sequence };

// Active window [t_start, t_stop).
struct AttackSchedule {
  int t_start = 0;
  int t_stop = 0;
  int delta() const { return t_stop - t_start; }
};

// AR(1) measurement corruption v_t = A_a v_{t-1} + vhat_t,
// vhat_t ~ N(0, Sigma_a).
struct DeceptionParams {
  Matrix A_a;
  Matrix Sigma_a;
  double sigma_a_bound = 0;  // >= ||Sigma_a||
};

struct AttackTrace {
  std::vector<Vector> v;  // injected disturbance per step, zero outside the window
  AttackSchedule schedule;
  AttackKind kind = AttackKind::none;
};

AttackTrace no_attack(int p, int T);

Vector deception_step(const DeceptionParams& params, const Vector& v_prev, RngStream& rng);

// AR(1) trace over the schedule window. When on_len/off_len are positive the
// window is chopped into active bursts separated by honest gaps (the AR state
// resets at each burst).
AttackTrace make_deception_trace(const DeceptionParams& params, const AttackSchedule& schedule,
                                 int p, int T, RngStream& rng, int on_len = 0, int off_len = 0);

// z_t = y_t + v_t. Throws data_error when lengths differ.
std::vector<Vector> apply_attack(const std::vector<Vector>& outputs, const AttackTrace& trace);

// True iff v_{t-W} = ... = v_{t-1} = 0. Requires t >= W.
bool is_w_step_honest(const AttackTrace& trace, int t, int W);

// zeta_t = (1/2)(A_K v_{t-1} + v_t) - v_t - (1/2)(A_K - I) v_{t-2},
// the attack's net contribution to the two-step test signal. Requires t >= 2
// and state-dimension disturbances.
Vector cumulative_adversarial_input(const AttackTrace& trace, const Matrix& A_K, int t);

// Isolated spikes inside the window, separated by at least `gap` steps
// (gap >= 3 leaves two honest steps before each spike, so the spike's net
// contribution is exactly -v_t/2). Each spike is scaled to
// ||zeta_t|| = margin * energy_floor(t).
AttackTrace make_min_energy_spikes(const std::function<double(int)>& energy_floor,
                                   const AttackSchedule& schedule, const Vector& direction,
                                   int T, double margin = 1.0, int gap = 3);

// CSV rows `t,v_1,...,v_p`; unspecified steps are zero. The schedule is the
// tight window around the nonzero entries.
AttackTrace load_attack_csv(const std::string& path, int p, int T);

}  // namespace adcps
