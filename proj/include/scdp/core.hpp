#pragma once

// Shared domain types: actions, observations, privileged states, commands,
// trajectories, observation histories, and heading-aligned frame transforms.
//
// Channel conventions (fixed repo-wide):
//   onboard observation: [omega, q, qdot, grav_sin, grav_cos (, v_base)]
//   privileged state:    [obs-with-v (6), markers_p (2x2), markers_v (2x2)]
// so the restricted state drops exactly index kVbaseIndex = 5.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace scdp {

using Vec2 = std::array<double, 2>;

inline constexpr std::size_t kActionWidth = 2;
inline constexpr std::size_t kObsWidth = 5;       // without base speed
inline constexpr std::size_t kObsWidthV = 6;      // with base speed
inline constexpr std::size_t kMarkerCount = 2;    // base point, pendulum tip
inline constexpr std::size_t kStateWidth = kObsWidthV + 4 * kMarkerCount;  // 14
inline constexpr std::size_t kRestrictedStateWidth = kStateWidth - 1;      // 13
inline constexpr std::size_t kVbaseIndex = 5;

inline double wrap_angle(double a) {
  return std::remainder(a, 6.283185307179586476925286766559);
}

// Counts v_base channels crossing the model-input boundary. The restricted
// configuration must keep this at zero over a whole episode.
struct VbaseInstrumentation {
  static std::atomic<std::uint64_t>& reads() {
    static std::atomic<std::uint64_t> c{0};
    return c;
  }
  static void reset() { reads() = 0; }
  static std::uint64_t count() { return reads().load(); }
};

struct Action {
  double drive = 0.0;  // normalized drive force u_v in [-1, 1]
  double steer = 0.0;  // normalized steer torque u_w in [-1, 1]

  Action clipped() const {
    return {std::clamp(drive, -1.0, 1.0), std::clamp(steer, -1.0, 1.0)};
  }
  std::array<double, kActionWidth> flat() const { return {drive, steer}; }
  static Action from_flat(const double* p) { return {p[0], p[1]}; }
};

struct OnboardObservation {
  double yaw_rate = 0.0;    // rad/s
  double joint_angle = 0.0; // pendulum angle minus default (rad)
  double joint_rate = 0.0;  // rad/s
  double grav_sin = 0.0;
  double grav_cos = 1.0;
  bool has_base_speed = false;
  double base_speed = 0.0;  // m/s, only meaningful if has_base_speed

  std::size_t width() const { return has_base_speed ? kObsWidthV : kObsWidth; }

  // Flatten for model consumption; reading the velocity channel here is
  // what the restricted-denoising instrumentation counts.
  void flatten_for_model(double* out) const {
    out[0] = yaw_rate;
    out[1] = joint_angle;
    out[2] = joint_rate;
    out[3] = grav_sin;
    out[4] = grav_cos;
    if (has_base_speed) {
      VbaseInstrumentation::reads()++;
      out[5] = base_speed;
    }
  }

  OnboardObservation without_velocity() const {
    OnboardObservation o = *this;
    o.has_base_speed = false;
    o.base_speed = 0.0;
    return o;
  }
};

struct PrivilegedState {
  OnboardObservation obs;                        // always includes v_base
  std::array<Vec2, kMarkerCount> markers_p{};    // heading-aligned positions
  std::array<Vec2, kMarkerCount> markers_v{};    // heading-aligned velocities

  // Full flatten (supervision target side); bypasses the v_base read counter
  // because targets legitimately contain velocities.
  void flatten(double* out) const;
  static PrivilegedState from_flat(const double* p);

  // Restricted flatten (model input side): v_base channel omitted.
  void flatten_restricted(double* out) const;
};

struct Command {
  enum class Kind { velocity, motion_reference };
  Kind kind = Kind::velocity;
  std::vector<double> values;  // velocity: [v_cmd, w_cmd]; reference: [theta_ref, theta_dot_ref, dpsi]

  static Command velocity(double v_cmd, double w_cmd) {
    return {Kind::velocity, {v_cmd, w_cmd}};
  }
  static Command motion_reference(double theta_ref, double theta_dot_ref,
                                  double dpsi) {
    return {Kind::motion_reference, {theta_ref, theta_dot_ref, dpsi}};
  }
  std::size_t width() const { return values.size(); }
};

// Interleaved future sequence: a_t, s_{t+1}, a_{t+1}, ..., s_{t+H}.
struct Trajectory {
  std::vector<Action> actions;          // a_t .. a_{t+H-1}
  std::vector<PrivilegedState> states;  // s_{t+1} .. s_{t+H}

  std::size_t horizon() const { return actions.size(); }
  void check() const {
    if (actions.size() != states.size()) {
      throw std::invalid_argument("trajectory: action/state length mismatch");
    }
  }
  std::size_t flat_size() const {
    return horizon() * (kActionWidth + kStateWidth);
  }
  std::vector<double> flatten() const;
  static Trajectory unflatten(const std::vector<double>& flat, std::size_t H);
};

// Same layout with v_base dropped from each state. States are kept as raw
// channel vectors: past the restriction boundary they are model I/O, not
// domain objects.
struct RestrictedTrajectory {
  std::vector<Action> actions;
  std::vector<std::vector<double>> states;  // each kRestrictedStateWidth wide

  std::size_t horizon() const { return actions.size(); }
  std::size_t flat_size() const {
    return horizon() * (kActionWidth + kRestrictedStateWidth);
  }
  std::vector<double> flatten() const;
  static RestrictedTrajectory unflatten(const std::vector<double>& flat,
                                        std::size_t H);
};

RestrictedTrajectory restrict_trajectory(const Trajectory& traj);

// Inverse of restrict_trajectory given the dropped velocity channels
// (one per state); used by tests and by the sampler output assembly.
Trajectory unrestrict_trajectory(const RestrictedTrajectory& rt,
                                 const std::vector<double>& v_base);

// Context window O_t = [o_{t-N}, a_{t-N}, ..., o_{t-1}, a_{t-1}, o_t].
struct ObservationHistory {
  std::vector<OnboardObservation> observations;  // N+1, newest last
  std::vector<Action> actions;                   // N

  std::size_t context_length() const { return actions.size(); }
  void check() const {
    if (observations.size() != actions.size() + 1) {
      throw std::invalid_argument("history: need N+1 observations, N actions");
    }
  }
  std::size_t flat_size() const {
    return observations.size() * observations.front().width() +
           actions.size() * kActionWidth;
  }
  // Interleaved o, a, o, a, ..., o via flatten_for_model (instrumented).
  std::vector<double> flatten_for_model() const;
};

// Frame transforms reduced to the planar case.
// heading_align: R(-psi) * (p - p_anchor)
inline Vec2 heading_align(const Vec2& p, const Vec2& p_anchor, double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  const double dx = p[0] - p_anchor[0], dy = p[1] - p_anchor[1];
  return {c * dx + s * dy, -s * dx + c * dy};
}

inline Vec2 heading_align_velocity(const Vec2& v, double psi) {
  return heading_align(v, {0.0, 0.0}, psi);
}

}  // namespace scdp
