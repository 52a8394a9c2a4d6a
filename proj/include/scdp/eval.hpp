#pragma once

// Closed-loop evaluation tasks. Sensor policies only ever see onboard
// observations plus the command; the privileged simulator state stays inside
// the harness (command generation and scoring).

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scdp/core.hpp"
#include "scdp/policy.hpp"
#include "scdp/sim.hpp"

namespace scdp {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void reset(std::uint64_t seed) = 0;
  // The harness owns the privileged state; implementations decide how much
  // of it they are allowed to look at.
  virtual Action act(const sim::SimState& state, const Command& cmd) = 0;
};

// Adapter exposing only observe(state) to a diffusion controller.
class SensorAgent : public Agent {
 public:
  SensorAgent(DiffusionController& ctrl, bool include_velocity)
      : ctrl_(ctrl), include_velocity_(include_velocity) {}
  void reset(std::uint64_t seed) override { ctrl_.reset(seed); }
  Action act(const sim::SimState& state, const Command& cmd) override {
    return ctrl_.act(sim::observe(state, include_velocity_), cmd);
  }

 private:
  DiffusionController& ctrl_;
  bool include_velocity_;
};

// Scripted controller with full state access, used as the reference agent.
class ExpertAgent : public Agent {
 public:
  void reset(std::uint64_t) override {}
  Action act(const sim::SimState& state, const Command& cmd) override;
};

struct EvalConfig {
  int trials = 200;
  double duration_s = 15.0;
  std::uint64_t seed = 0;
  bool randomize = true;
  sim::RandomizationConfig randomization;
  sim::PushConfig push;  // used by the perturbation task only
};

struct TrialRecord {
  std::uint64_t seed = 0;
  bool success = false;
  double score = 0.0;  // task-specific auxiliary scalar
  int steps = 0;
  std::string error;  // non-empty if the policy threw
};

struct TaskResult {
  std::string task;
  double success_rate = 0.0;
  double mean_score = 0.0;
  std::vector<TrialRecord> trials;
  std::uint64_t seed = 0;
};

// Forward velocity command with random pushes; success = no fall.
TaskResult run_perturbation(Agent& agent, const EvalConfig& cfg);

// Four 3 s command segments (+/-0.5 m/s, +/-1 rad/s); success = no fall,
// score = mean absolute tracking error of the commanded channel.
TaskResult run_joystick(Agent& agent, const EvalConfig& cfg);

// Five waypoints inside a 2.5 m radius, 60 s budget, pure-pursuit command
// generator; score = fraction reached (within 0.2 m), success = all reached.
TaskResult run_waypoints(Agent& agent, const EvalConfig& cfg);

using Marker2Trace =
    std::vector<std::array<std::array<double, 2>, kMarkerCount>>;
using Marker3Trace =
    std::vector<std::array<std::array<double, 3>, kMarkerCount>>;

// Body-frame (2d) and world-frame (3d) marker positions for scoring.
std::array<std::array<double, 2>, kMarkerCount> local_markers(
    const sim::SimState& s, const sim::SimParams& p);
std::array<std::array<double, 3>, kMarkerCount> global_markers(
    const sim::SimState& s, const sim::SimParams& p);

struct ReferenceTrace {
  std::vector<sim::SimState> states;   // clean expert rollout, nominal params
  std::vector<Command> commands;  // motion-reference commands sans yaw term
};

// Clean expert rollout under a held-out piecewise velocity profile.
ReferenceTrace make_reference(std::uint64_t seed, int steps,
                              const sim::SimParams& params);

struct TrackingResult {
  TaskResult task;
  double mpjpe_local = 0.0;   // mm analog
  double mpjpe_global = 0.0;  // mm analog
  double vel_dist = 0.0;
  double accel_dist = 0.0;
};

TrackingResult run_reference_tracking(Agent& agent, const EvalConfig& cfg);

struct AblationCell {
  std::string name;
  // Free-form knob bag; the runner callback interprets it.
  double sigma_a = 0.12;
  double push_magnitude = 0.5;
  int context_len = 4;
  bool mixed_obs = true;
  bool restricted = true;
  bool ctx_align = true;
  bool full_prefix_attention = true;
};

struct AblationOutcome {
  std::string name;
  bool ok = false;
  double success_rate = 0.0;
  std::string error;
};

// Runs every cell; a throwing cell is recorded as failed and the sweep
// continues.
std::vector<AblationOutcome> run_ablation_matrix(
    const std::vector<AblationCell>& cells,
    const std::function<double(const AblationCell&)>& run_cell);

}  // namespace scdp
