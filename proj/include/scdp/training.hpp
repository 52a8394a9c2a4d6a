#pragma once

// Loss assembly and the training loop: mixed-observation supervision,
// restricted-input noising, command tracking term, optional representation
// alignment, AdamW with warmup+cosine decay.

#include <functional>
#include <memory>
#include <optional>

#include "scdp/datagen.hpp"
#include "scdp/denoiser.hpp"
#include "scdp/schedule.hpp"

namespace scdp {

// Feature flags that shape what the model sees and predicts.
struct PipelineConfig {
  std::size_t context_len = 4;  // N
  std::size_t horizon = 16;     // H
  bool mixed_obs = true;          // supervise on privileged states
  bool restricted = true;         // strip v_base from model state inputs
  bool ctx_align = true;          // context actions = executed noisy stream
  bool velocity_feedback = false; // context observations include v_base
  bool full_prefix_attention = true;
  bool repr_align = false;
  Command::Kind cmd_kind = Command::Kind::velocity;

  std::size_t obs_width() const { return velocity_feedback ? kObsWidthV : kObsWidth; }
  std::size_t state_out_width() const {
    return mixed_obs ? kStateWidth : obs_width();
  }
  std::size_t state_in_width() const {
    const bool has_v = mixed_obs || velocity_feedback;
    return (restricted && has_v) ? state_out_width() - 1 : state_out_width();
  }
  std::size_t cmd_width() const {
    return cmd_kind == Command::Kind::velocity ? 2 : 3;
  }
};

struct TrainingExample {
  Mat ctx_obs;            // (N+1) x obs_width, instrumented flatten
  Mat ctx_act;            // N x A
  Mat target_act;         // H x A (executed actions)
  Mat target_state;       // H x state_out_width (full supervision target)
  Mat input_state_clean;  // H x state_in_width (restricted channels)
  std::vector<double> cmd;
  Command::Kind cmd_kind = Command::Kind::velocity;
  std::optional<Mat> ctx_priv;  // (N+1) x kStateWidth when repr_align
};

// Builds the example at rollout step t. Throws std::out_of_range unless
// N <= t and t + H < rollout length.
TrainingExample make_example(const RolloutRecord& rollout, std::size_t t,
                             const PipelineConfig& pipe);

struct TrainConfig {
  PipelineConfig pipe;
  std::size_t layers = 6;
  std::size_t heads = 4;
  std::size_t d_model = 512;
  std::size_t d_ff = 1024;
  ScheduleConfig schedule;  // used for both classes...
  std::optional<ScheduleConfig> action_schedule;  // ...unless given here

  std::size_t batch = 128;
  std::size_t updates = 50000;  // desk-scale default
  std::size_t warmup = 2000;
  double lr_peak = 1e-4;
  double lr_final = 1e-6;
  double weight_decay = 1e-6;
  double lambda_cmd = 0.1;
  double lambda_repr = 1.0;
  std::size_t action_cutoff = 8;  // action loss zeroed beyond this step
  double grad_clip = 1.0;         // global max-norm; <= 0 disables
  double dropout = 0.0;           // only 0 supported
  double divergence_threshold = 1e4;
  std::uint64_t seed = 0;
  std::size_t log_every = 200;

  DenoiserConfig model_config() const;
  double lr_at(std::size_t update_index) const;  // 1-based
};

struct LossBreakdown {
  double total = 0.0;
  double ddpm_res = 0.0;
  double cmd = 0.0;
  double repr = 0.0;
  std::size_t zero_norm_features = 0;  // repr-align degenerate pairs
};

// Forward + backward for one example: accumulates parameter gradients in the
// model's store and returns the loss components. Noise draws come from rng.
LossBreakdown compute_loss(const TrainingExample& ex, Denoiser& model,
                           const DualSchedule& schedules, Rng& rng,
                           const TrainConfig& cfg);

class AdamW {
 public:
  AdamW(std::size_t n, double weight_decay)
      : m_(n, 0.0), v_(n, 0.0), wd_(weight_decay) {}

  void step(std::vector<double>& params, const std::vector<double>& grads,
            double lr);

 private:
  std::vector<double> m_, v_;
  double wd_;
  std::size_t t_ = 0;
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
};

struct TrainLogRecord {
  std::size_t step;
  double loss, ddpm_res, cmd, repr, lr;
};

struct TrainResult {
  std::unique_ptr<Denoiser> model;
  std::vector<TrainLogRecord> log;
};

using ExampleSampler = std::function<TrainingExample(Rng&)>;

// Uniform sampler over (rollout, t) pairs that admit a full context+horizon
// window; rollouts shorter than N+H+1 are never selected.
ExampleSampler dataset_sampler(const RolloutDataset& ds,
                               const PipelineConfig& pipe);

// Runs the loop; fully deterministic given cfg.seed (single-threaded).
// Throws on divergence (loss above cfg.divergence_threshold) with the
// component breakdown in the message.
TrainResult train_model(const ExampleSampler& sampler, const TrainConfig& cfg);

}  // namespace scdp
