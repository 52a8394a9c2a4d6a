#include "scdp/core.hpp"

namespace scdp {

void PrivilegedState::flatten(double* out) const {
  out[0] = obs.yaw_rate;
  out[1] = obs.joint_angle;
  out[2] = obs.joint_rate;
  out[3] = obs.grav_sin;
  out[4] = obs.grav_cos;
  out[5] = obs.base_speed;
  std::size_t i = kObsWidthV;
  for (const auto& p : markers_p) {
    out[i++] = p[0];
    out[i++] = p[1];
  }
  for (const auto& v : markers_v) {
    out[i++] = v[0];
    out[i++] = v[1];
  }
}

PrivilegedState PrivilegedState::from_flat(const double* p) {
  PrivilegedState s;
  s.obs.yaw_rate = p[0];
  s.obs.joint_angle = p[1];
  s.obs.joint_rate = p[2];
  s.obs.grav_sin = p[3];
  s.obs.grav_cos = p[4];
  s.obs.has_base_speed = true;
  s.obs.base_speed = p[5];
  std::size_t i = kObsWidthV;
  for (auto& mp : s.markers_p) {
    mp[0] = p[i++];
    mp[1] = p[i++];
  }
  for (auto& mv : s.markers_v) {
    mv[0] = p[i++];
    mv[1] = p[i++];
  }
  return s;
}

void PrivilegedState::flatten_restricted(double* out) const {
  double full[kStateWidth];
  flatten(full);
  std::size_t j = 0;
  for (std::size_t i = 0; i < kStateWidth; ++i) {
    if (i == kVbaseIndex) continue;
    out[j++] = full[i];
  }
}

std::vector<double> Trajectory::flatten() const {
  check();
  std::vector<double> flat(flat_size());
  double* p = flat.data();
  for (std::size_t i = 0; i < horizon(); ++i) {
    const auto a = actions[i].flat();
    p[0] = a[0];
    p[1] = a[1];
    p += kActionWidth;
    states[i].flatten(p);
    p += kStateWidth;
  }
  return flat;
}

Trajectory Trajectory::unflatten(const std::vector<double>& flat,
                                 std::size_t H) {
  if (flat.size() != H * (kActionWidth + kStateWidth)) {
    throw std::invalid_argument("trajectory unflatten: size mismatch");
  }
  Trajectory t;
  const double* p = flat.data();
  for (std::size_t i = 0; i < H; ++i) {
    t.actions.push_back(Action::from_flat(p));
    p += kActionWidth;
    t.states.push_back(PrivilegedState::from_flat(p));
    p += kStateWidth;
  }
  return t;
}

std::vector<double> RestrictedTrajectory::flatten() const {
  std::vector<double> flat(flat_size());
  double* p = flat.data();
  for (std::size_t i = 0; i < horizon(); ++i) {
    const auto a = actions[i].flat();
    p[0] = a[0];
    p[1] = a[1];
    p += kActionWidth;
    for (std::size_t j = 0; j < kRestrictedStateWidth; ++j) p[j] = states[i][j];
    p += kRestrictedStateWidth;
  }
  return flat;
}

RestrictedTrajectory RestrictedTrajectory::unflatten(
    const std::vector<double>& flat, std::size_t H) {
  if (flat.size() != H * (kActionWidth + kRestrictedStateWidth)) {
    throw std::invalid_argument("restricted unflatten: size mismatch");
  }
  RestrictedTrajectory t;
  const double* p = flat.data();
  for (std::size_t i = 0; i < H; ++i) {
    t.actions.push_back(Action::from_flat(p));
    p += kActionWidth;
    t.states.emplace_back(p, p + kRestrictedStateWidth);
    p += kRestrictedStateWidth;
  }
  return t;
}

RestrictedTrajectory restrict_trajectory(const Trajectory& traj) {
  traj.check();
  RestrictedTrajectory rt;
  rt.actions = traj.actions;
  for (const auto& s : traj.states) {
    std::vector<double> row(kRestrictedStateWidth);
    s.flatten_restricted(row.data());
    rt.states.push_back(std::move(row));
  }
  return rt;
}

Trajectory unrestrict_trajectory(const RestrictedTrajectory& rt,
                                 const std::vector<double>& v_base) {
  if (v_base.size() != rt.horizon()) {
    throw std::invalid_argument("unrestrict: need one v_base per state");
  }
  Trajectory t;
  t.actions = rt.actions;
  for (std::size_t i = 0; i < rt.horizon(); ++i) {
    double full[kStateWidth];
    std::size_t j = 0;
    for (std::size_t c = 0; c < kStateWidth; ++c) {
      full[c] = (c == kVbaseIndex) ? v_base[i] : rt.states[i][j++];
    }
    t.states.push_back(PrivilegedState::from_flat(full));
  }
  return t;
}

std::vector<double> ObservationHistory::flatten_for_model() const {
  check();
  std::vector<double> flat(flat_size());
  double* p = flat.data();
  const std::size_t ow = observations.front().width();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    observations[i].flatten_for_model(p);
    p += ow;
    const auto a = actions[i].flat();
    p[0] = a[0];
    p[1] = a[1];
    p += kActionWidth;
  }
  observations.back().flatten_for_model(p);
  return flat;
}

}  // namespace scdp
