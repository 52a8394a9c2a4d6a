#pragma once

// Receding-horizon diffusion controller: keep an observation/action context
// buffer, sample a trajectory by reverse diffusion over restricted inputs,
// execute only the first action, replan every step.

#include <deque>

#include "scdp/checkpoint.hpp"
#include "scdp/denoiser.hpp"
#include "scdp/schedule.hpp"

namespace scdp {

struct Plan {
  Mat actions;  // H x action_width, clean prediction
  Mat states;   // H x state_out_width (v_base filled from the final x0)
};

// One full reverse chain; both token classes descend synchronously
// k = K-1 .. 0. Nonfinite samples are resampled once, then a hard error.
Plan plan_trajectory(Denoiser& model, const DualSchedule& schedules,
                     const DenoiserInput& conditioning, Rng& rng);

class DiffusionController {
 public:
  DiffusionController(Denoiser& model, const DualSchedule& schedules,
                      std::uint64_t seed);

  // Policy-side surface: onboard observation + command only. Cold start
  // fills the context by repeating the first observation with zero actions.
  Action act(const OnboardObservation& obs, const Command& cmd);

  void reset(std::uint64_t seed);

  // receding-horizon accounting, asserted by tests
  std::size_t plans_made() const { return plans_made_; }
  std::size_t actions_executed() const { return actions_executed_; }
  std::size_t buffer_observations() const { return obs_buf_.size(); }
  std::size_t buffer_actions() const { return act_buf_.size(); }
  const Plan& last_plan() const { return last_plan_; }

 private:
  DenoiserInput build_conditioning(const Command& cmd) const;

  Denoiser& model_;
  const DualSchedule& schedules_;
  Rng rng_;
  std::deque<OnboardObservation> obs_buf_;  // N+1 once warm
  std::deque<Action> act_buf_;              // N
  Plan last_plan_;
  bool have_plan_ = false;
  std::size_t next_fallback_index_ = 0;
  std::size_t plans_made_ = 0;
  std::size_t actions_executed_ = 0;
};

}  // namespace scdp
