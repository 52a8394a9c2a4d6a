#pragma once

// Planar unicycle-with-pendulum surrogate environment at 50 Hz, plus the
// scripted expert controller, push perturbations, and domain randomization.
// The base velocity is hidden from onboard sensing; the pendulum joint is
// measurable; |theta| > theta_fail is a fall.

#include <cmath>
#include <cstdint>
#include <optional>

#include "scdp/core.hpp"
#include "scdp/rng.hpp"

namespace scdp::sim {

struct SimState {
  double x = 0.0, y = 0.0;     // global position (m)
  double psi = 0.0;            // heading (rad)
  double v = 0.0;              // forward speed (m/s)
  double omega = 0.0;          // yaw rate (rad/s)
  double theta = 0.0;          // pendulum angle from vertical (rad)
  double theta_dot = 0.0;      // pendulum rate (rad/s)
};

struct SimParams {
  double dt = 0.02;
  double m = 1.0;
  double inertia = 0.2;
  double f_max = 3.0;
  double t_max = 1.5;
  double c_v = 0.5;
  double c_w = 0.4;
  double c_theta = 0.6;
  double g = 9.81;
  double l = 0.5;
  double theta_fail = 1.0;
  std::size_t action_delay = 0;  // steps, drawn from {0, 1}
};

struct RandomizationConfig {
  double mass_frac = 0.2;      // +-20%
  double damping_frac = 0.3;   // +-30%
  bool randomize_delay = true; // action delay in {0, 1}
};

SimParams randomize_params(const SimParams& nominal,
                           const RandomizationConfig& cfg, Rng& rng);

// Semi-implicit Euler step; the action is clipped before use.
SimState step(const SimState& s, const Action& a, const SimParams& p);

bool fallen(const SimState& s, const SimParams& p);

OnboardObservation observe(const SimState& s, bool include_velocity);

// Onboard channels plus heading-aligned marker kinematics of the base point
// and the pendulum tip.
PrivilegedState privileged(const SimState& s, const SimParams& p);

struct ExpertGains {
  double k_v = 2.0;
  double k_theta = 1.5;
  double k_theta_dot = 0.4;
  double k_w = 2.0;
};

Action expert_action(const SimState& s, const Command& cmd,
                     const ExpertGains& gains = {});

struct PushConfig {
  bool enabled = true;
  double dv_max = 0.5;        // m/s
  double dw_max = 0.5;        // rad/s
  double interval_min = 1.0;  // s
  double interval_max = 3.0;  // s
};

// Instantaneous base impulse. The bob keeps its inertial velocity, so a jump
// in v shows up as a jump in the relative joint rate, the impulsive analog of
// the -(v_dot/l) cos(theta) coupling in the continuous dynamics.
inline SimState apply_push(SimState s, double dv, double dw,
                           const SimParams& p) {
  s.v += dv;
  s.omega += dw;
  s.theta_dot -= dv * std::cos(s.theta) / p.l;
  return s;
}

// Draws inter-push intervals uniformly from [interval_min, interval_max];
// poll at every control step.
class PushSchedule {
 public:
  PushSchedule(const PushConfig& cfg, Rng rng);

  // Returns the impulse to apply at this step, if one is due.
  std::optional<std::pair<double, double>> poll(double t_now, double dt);

 private:
  PushConfig cfg_;
  Rng rng_;
  double next_time_;
};

}  // namespace scdp::sim
