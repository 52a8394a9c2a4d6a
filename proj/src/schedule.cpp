#include "scdp/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace scdp {

NoiseSchedule::NoiseSchedule(const ScheduleConfig& cfg) : cfg_(cfg) {
  const std::size_t K = cfg.steps;
  if (K < 2) throw std::invalid_argument("schedule: need at least 2 steps");
  beta_.resize(K);
  alpha_bar_.resize(K);
  alpha_coeff_.resize(K);
  gamma_coeff_.resize(K);
  sigma_.resize(K);

  double abar = 1.0;
  for (std::size_t k = 0; k < K; ++k) {
    beta_[k] = cfg.beta_start +
               (cfg.beta_end - cfg.beta_start) * double(k) / double(K - 1);
    abar *= 1.0 - beta_[k];
    alpha_bar_[k] = abar;
  }
  for (std::size_t k = 0; k < K; ++k) {
    alpha_coeff_[k] = 1.0 / std::sqrt(1.0 - beta_[k]);
    gamma_coeff_[k] = beta_[k] / std::sqrt(1.0 - alpha_bar_[k]);
    if (k == 0) {
      sigma_[k] = 0.0;  // last reverse step is deterministic
    } else if (cfg.posterior_variance) {
      // beta_tilde_k = (1 - abar_{k-1}) / (1 - abar_k) * beta_k
      sigma_[k] = std::sqrt((1.0 - alpha_bar_[k - 1]) /
                            (1.0 - alpha_bar_[k]) * beta_[k]);
    } else {
      sigma_[k] = std::sqrt(beta_[k]);
    }
  }
}

void NoiseSchedule::check_step(std::size_t k) const {
  if (k >= steps()) throw std::out_of_range("schedule: step index out of range");
}

void NoiseSchedule::forward_noise(std::span<const double> x0, std::size_t k,
                                  std::span<const double> eps,
                                  std::span<double> out) const {
  check_step(k);
  if (x0.size() != eps.size() || x0.size() != out.size()) {
    throw std::invalid_argument("forward_noise: shape mismatch");
  }
  const double sa = std::sqrt(alpha_bar_[k]);
  const double se = std::sqrt(1.0 - alpha_bar_[k]);
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = sa * x0[i] + se * eps[i];
}

void NoiseSchedule::eps_from_x0(std::span<const double> x_k,
                                std::span<const double> x0_pred, std::size_t k,
                                std::span<double> eps_out) const {
  check_step(k);
  if (x_k.size() != x0_pred.size() || x_k.size() != eps_out.size()) {
    throw std::invalid_argument("eps_from_x0: shape mismatch");
  }
  const double sa = std::sqrt(alpha_bar_[k]);
  const double inv_se = 1.0 / std::sqrt(1.0 - alpha_bar_[k]);
  for (std::size_t i = 0; i < x_k.size(); ++i) {
    eps_out[i] = (x_k[i] - sa * x0_pred[i]) * inv_se;
  }
}

void NoiseSchedule::reverse_step(std::span<const double> x_k,
                                 std::span<const double> eps_pred,
                                 std::size_t k, std::span<const double> noise,
                                 std::span<double> out) const {
  check_step(k);
  if (x_k.size() != eps_pred.size() || x_k.size() != out.size() ||
      noise.size() != x_k.size()) {
    throw std::invalid_argument("reverse_step: shape mismatch");
  }
  const double a = alpha_coeff_[k];
  const double g = gamma_coeff_[k];
  const double s = sigma_[k];
  for (std::size_t i = 0; i < x_k.size(); ++i) {
    out[i] = a * (x_k[i] - g * eps_pred[i]) + s * noise[i];
  }
}

DualSchedule::DualSchedule(const ScheduleConfig& state_cfg,
                           const ScheduleConfig& action_cfg)
    : state(state_cfg), action(action_cfg) {
  if (state.steps() != action.steps()) {
    throw std::invalid_argument("dual schedule: step counts must match");
  }
}

}  // namespace scdp
