#pragma once

// DDPM noise schedules: forward noising, x0 -> eps conversion, and the
// reverse-sampling step, with separate schedules for state and action tokens.

#include <cstddef>
#include <span>
#include <vector>

#include "scdp/rng.hpp"

namespace scdp {

struct ScheduleConfig {
  std::size_t steps = 50;        // K
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  bool posterior_variance = true;  // sigma_k^2 = beta_tilde; false -> beta_k
};

class NoiseSchedule {
 public:
  explicit NoiseSchedule(const ScheduleConfig& cfg = {});

  std::size_t steps() const { return beta_.size(); }
  const ScheduleConfig& config() const { return cfg_; }
  double beta(std::size_t k) const { return beta_.at(k); }
  double alpha_bar(std::size_t k) const { return alpha_bar_.at(k); }
  double alpha_coeff(std::size_t k) const { return alpha_coeff_.at(k); }
  double gamma_coeff(std::size_t k) const { return gamma_coeff_.at(k); }
  double sigma(std::size_t k) const { return sigma_.at(k); }

  // sqrt(abar_k) x0 + sqrt(1 - abar_k) eps
  void forward_noise(std::span<const double> x0, std::size_t k,
                     std::span<const double> eps,
                     std::span<double> out) const;

  // (x_k - sqrt(abar_k) x0_pred) / sqrt(1 - abar_k)
  void eps_from_x0(std::span<const double> x_k,
                   std::span<const double> x0_pred, std::size_t k,
                   std::span<double> eps_out) const;

  // alpha_k (x_k - gamma_k eps_pred) + sigma_k noise; at k == 0 the
  // injected-noise term is suppressed regardless of `noise`.
  void reverse_step(std::span<const double> x_k,
                    std::span<const double> eps_pred, std::size_t k,
                    std::span<const double> noise,
                    std::span<double> out) const;

 private:
  void check_step(std::size_t k) const;

  ScheduleConfig cfg_;
  std::vector<double> beta_, alpha_bar_, alpha_coeff_, gamma_coeff_, sigma_;
};

struct DualSchedule {
  NoiseSchedule state;
  NoiseSchedule action;

  explicit DualSchedule(const ScheduleConfig& cfg = {})
      : state(cfg), action(cfg) {}
  DualSchedule(const ScheduleConfig& state_cfg, const ScheduleConfig& action_cfg);

  std::size_t steps() const { return state.steps(); }

  // Independent uniform draws over {0..K-1}: (k_state, k_action).
  std::pair<std::size_t, std::size_t> sample_training_steps(Rng& rng) const {
    const std::size_t ks = rng.uniform_index(steps());
    const std::size_t ka = rng.uniform_index(steps());
    return {ks, ka};
  }
};

}  // namespace scdp
