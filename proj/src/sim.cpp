#include "scdp/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace scdp::sim {

SimParams randomize_params(const SimParams& nominal,
                           const RandomizationConfig& cfg, Rng& rng) {
  SimParams p = nominal;
  p.m = nominal.m * (1.0 + cfg.mass_frac * (2.0 * rng.uniform() - 1.0));
  const double df = 1.0 + cfg.damping_frac * (2.0 * rng.uniform() - 1.0);
  p.c_v = nominal.c_v * df;
  p.c_w = nominal.c_w * df;
  p.c_theta = nominal.c_theta * df;
  p.action_delay = cfg.randomize_delay ? rng.uniform_index(2) : 0;
  return p;
}

SimState step(const SimState& s, const Action& a_raw, const SimParams& p) {
  const Action a = a_raw.clipped();
  const double v_dot = (a.drive * p.f_max - p.c_v * s.v) / p.m;
  const double w_dot = (a.steer * p.t_max - p.c_w * s.omega) / p.inertia;
  const double th_ddot = -(p.g / p.l) * std::sin(s.theta) -
                         p.c_theta * s.theta_dot -
                         (v_dot / p.l) * std::cos(s.theta);
  SimState n = s;
  n.v = s.v + p.dt * v_dot;
  n.omega = s.omega + p.dt * w_dot;
  n.theta_dot = s.theta_dot + p.dt * th_ddot;
  n.x = s.x + p.dt * n.v * std::cos(s.psi);
  n.y = s.y + p.dt * n.v * std::sin(s.psi);
  n.psi = s.psi + p.dt * n.omega;
  n.theta = s.theta + p.dt * n.theta_dot;
  if (!std::isfinite(n.v) || !std::isfinite(n.theta) || !std::isfinite(n.x)) {
    throw std::runtime_error("sim: nonfinite state");
  }
  return n;
}

bool fallen(const SimState& s, const SimParams& p) {
  return std::abs(s.theta) > p.theta_fail;
}

OnboardObservation observe(const SimState& s, bool include_velocity) {
  OnboardObservation o;
  o.yaw_rate = s.omega;
  o.joint_angle = s.theta;
  o.joint_rate = s.theta_dot;
  o.grav_sin = std::sin(s.theta);
  o.grav_cos = std::cos(s.theta);
  o.has_base_speed = include_velocity;
  o.base_speed = include_velocity ? s.v : 0.0;
  return o;
}

PrivilegedState privileged(const SimState& s, const SimParams& p) {
  PrivilegedState ps;
  ps.obs = observe(s, true);
  ps.markers_p[0] = {0.0, 0.0};  // base point, zero by construction
  ps.markers_p[1] = {p.l * std::sin(s.theta), p.l * std::cos(s.theta)};
  ps.markers_v[0] = {0.0, 0.0};
  ps.markers_v[1] = {p.l * s.theta_dot * std::cos(s.theta),
                     -p.l * s.theta_dot * std::sin(s.theta)};
  return ps;
}

Action expert_action(const SimState& s, const Command& cmd,
                     const ExpertGains& k) {
  if (cmd.kind != Command::Kind::velocity) {
    throw std::invalid_argument("expert_action: velocity command required");
  }
  const double v_cmd = cmd.values.at(0);
  const double w_cmd = cmd.values.at(1);
  Action a;
  // The pendulum feedback enters with a positive sign: drive couples into
  // theta_ddot as -(v_dot/l) cos(theta), so +k_theta theta, +k_theta_dot
  // theta_dot add stiffness and damping to the joint (the opposite sign
  // pumps the oscillation).
  a.drive = k.k_v * (v_cmd - s.v) + k.k_theta * s.theta +
            k.k_theta_dot * s.theta_dot;
  a.steer = k.k_w * (w_cmd - s.omega);
  return a.clipped();
}

PushSchedule::PushSchedule(const PushConfig& cfg, Rng rng)
    : cfg_(cfg), rng_(rng) {
  next_time_ = rng_.uniform(cfg_.interval_min, cfg_.interval_max);
}

std::optional<std::pair<double, double>> PushSchedule::poll(double t_now,
                                                            double dt) {
  if (!cfg_.enabled || t_now + 0.5 * dt < next_time_) return std::nullopt;
  next_time_ = t_now + rng_.uniform(cfg_.interval_min, cfg_.interval_max);
  const double dv = rng_.uniform(-cfg_.dv_max, cfg_.dv_max);
  const double dw = rng_.uniform(-cfg_.dw_max, cfg_.dw_max);
  return std::make_pair(dv, dw);
}

}  // namespace scdp::sim
