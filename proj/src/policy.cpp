#include "scdp/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace scdp {
namespace {

bool all_finite(const Mat& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) return false;
  }
  return true;
}

// Drop the v_base column when the model's input layout is one narrower than
// its output layout; identity otherwise.
void restrict_row(const double* full, std::size_t out_w, std::size_t in_w,
                  double* res) {
  if (in_w == out_w) {
    std::copy(full, full + out_w, res);
    return;
  }
  std::size_t j = 0;
  for (std::size_t c = 0; c < out_w; ++c) {
    if (c == kVbaseIndex) continue;
    res[j++] = full[c];
  }
}

Plan run_chain(Denoiser& model, const DualSchedule& schedules,
               DenoiserInput in, Rng& rng) {
  const auto& mc = model.config();
  const std::size_t H = mc.horizon;
  const std::size_t K = schedules.steps();
  if (mc.diffusion_steps != K) {
    throw std::invalid_argument("plan: schedule steps do not match the model");
  }

  Mat x_act(H, mc.action_width);
  Mat x_state(H, mc.state_in_width);
  for (std::size_t i = 0; i < x_act.size(); ++i) x_act.data()[i] = rng.normal();
  for (std::size_t i = 0; i < x_state.size(); ++i) {
    x_state.data()[i] = rng.normal();
  }

  Plan plan;
  std::vector<double> eps(std::max(x_act.size(), x_state.size()));
  std::vector<double> noise(eps.size());
  Mat x0_res(H, mc.state_in_width);
  for (std::size_t k = K; k-- > 0;) {
    in.hor_act = x_act;
    in.hor_state = x_state;
    in.k_state = k;
    in.k_action = k;
    DenoiserOutput out = model.forward(in);
    plan.actions = out.actions;
    plan.states = out.states;

    if (k == 0) break;
    // action class
    schedules.action.eps_from_x0(
        std::span(x_act.data(), x_act.size()),
        std::span(out.actions.data(), out.actions.size()), k,
        std::span(eps.data(), x_act.size()));
    for (std::size_t i = 0; i < x_act.size(); ++i) noise[i] = rng.normal();
    schedules.action.reverse_step(std::span(x_act.data(), x_act.size()),
                                  std::span(eps.data(), x_act.size()), k,
                                  std::span(noise.data(), x_act.size()),
                                  std::span(x_act.data(), x_act.size()));
    // state class: the denoiser never ingests v_base, so the x0 prediction
    // is re-restricted before the reverse step
    for (std::size_t i = 0; i < H; ++i) {
      restrict_row(out.states.row(i), mc.state_out_width, mc.state_in_width,
                   x0_res.row(i));
    }
    schedules.state.eps_from_x0(
        std::span(x_state.data(), x_state.size()),
        std::span(x0_res.data(), x0_res.size()), k,
        std::span(eps.data(), x_state.size()));
    for (std::size_t i = 0; i < x_state.size(); ++i) noise[i] = rng.normal();
    schedules.state.reverse_step(std::span(x_state.data(), x_state.size()),
                                 std::span(eps.data(), x_state.size()), k,
                                 std::span(noise.data(), x_state.size()),
                                 std::span(x_state.data(), x_state.size()));
    if (!all_finite(x_act) || !all_finite(x_state)) {
      throw std::runtime_error("plan: nonfinite sample in reverse chain");
    }
  }
  if (!all_finite(plan.actions) || !all_finite(plan.states)) {
    throw std::runtime_error("plan: nonfinite prediction");
  }
  return plan;
}

}  // namespace

Plan plan_trajectory(Denoiser& model, const DualSchedule& schedules,
                     const DenoiserInput& conditioning, Rng& rng) {
  try {
    return run_chain(model, schedules, conditioning, rng);
  } catch (const std::runtime_error&) {
    // one resample on numeric blowup, then let the error propagate
    return run_chain(model, schedules, conditioning, rng);
  }
}

DiffusionController::DiffusionController(Denoiser& model,
                                         const DualSchedule& schedules,
                                         std::uint64_t seed)
    : model_(model), schedules_(schedules), rng_(seed) {}

void DiffusionController::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  obs_buf_.clear();
  act_buf_.clear();
  have_plan_ = false;
  next_fallback_index_ = 0;
  plans_made_ = 0;
  actions_executed_ = 0;
}

DenoiserInput DiffusionController::build_conditioning(
    const Command& cmd) const {
  const auto& mc = model_.config();
  DenoiserInput in;
  in.ctx_obs = Mat(mc.context_len + 1, mc.obs_width);
  for (std::size_t i = 0; i <= mc.context_len; ++i) {
    if (obs_buf_[i].width() != mc.obs_width) {
      throw std::invalid_argument("controller: observation width mismatch");
    }
    obs_buf_[i].flatten_for_model(in.ctx_obs.row(i));
  }
  in.ctx_act = Mat(mc.context_len, mc.action_width);
  for (std::size_t i = 0; i < mc.context_len; ++i) {
    in.ctx_act(i, 0) = act_buf_[i].drive;
    in.ctx_act(i, 1) = act_buf_[i].steer;
  }
  if (cmd.width() != mc.cmd_width) {
    throw std::invalid_argument("controller: command width mismatch");
  }
  in.cmd = cmd.values;
  return in;
}

Action DiffusionController::act(const OnboardObservation& obs,
                                const Command& cmd) {
  const std::size_t N = model_.config().context_len;
  if (obs_buf_.empty()) {
    // cold start: repeat the first observation, zero past actions
    obs_buf_.assign(N + 1, obs);
    act_buf_.assign(N, Action{});
  } else {
    obs_buf_.push_back(obs);
    obs_buf_.pop_front();
  }

  Action a;
  try {
    last_plan_ = plan_trajectory(model_, schedules_, build_conditioning(cmd),
                                 rng_);
    have_plan_ = true;
    next_fallback_index_ = 1;
    ++plans_made_;
    a = Action{last_plan_.actions(0, 0), last_plan_.actions(0, 1)}.clipped();
  } catch (const std::exception&) {
    // emit the previous plan's next action once, then give up
    if (!have_plan_ ||
        next_fallback_index_ >= last_plan_.actions.rows()) {
      throw;
    }
    a = Action{last_plan_.actions(next_fallback_index_, 0),
               last_plan_.actions(next_fallback_index_, 1)}
            .clipped();
    ++next_fallback_index_;
    have_plan_ = false;
  }

  act_buf_.push_back(a);
  if (act_buf_.size() > N) act_buf_.pop_front();
  ++actions_executed_;
  return a;
}

}  // namespace scdp
