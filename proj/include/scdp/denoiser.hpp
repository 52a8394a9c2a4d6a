#pragma once

// Transformer-encoder denoiser. Input tokens interleave an observation/action
// context window with a noised (restricted) future trajectory; output heads
// decode clean actions and full-width states (v_base included) for every
// horizon step.
//
// Token layout: [o_{t-N}, a_{t-N}, ..., o_{t-1}, a_{t-1}, o_t | a_t, s_{t+1},
// ..., a_{t+H-1}, s_{t+H}], total L = 2N+1+2H.

#include <optional>

#include "scdp/core.hpp"
#include "scdp/nn.hpp"

namespace scdp {

enum class TokenClass { ctx_obs, ctx_act, hor_act, hor_state };

struct DenoiserConfig {
  std::size_t layers = 6;
  std::size_t heads = 4;
  std::size_t d_model = 512;
  std::size_t d_ff = 1024;
  std::size_t context_len = 4;   // N
  std::size_t horizon = 16;      // H
  std::size_t diffusion_steps = 50;  // K, sizes the timestep tables

  std::size_t obs_width = kObsWidth;
  std::size_t action_width = kActionWidth;
  std::size_t state_in_width = kRestrictedStateWidth;
  std::size_t state_out_width = kStateWidth;
  std::size_t cmd_width = 2;
  std::size_t priv_width = kStateWidth;  // repr-align encoder input

  bool full_prefix_attention = true;  // bidirectional context block
  bool condition_context_tokens = true;
  bool repr_align = false;  // adds the privileged alignment encoder

  std::size_t token_count() const {
    return 2 * context_len + 1 + 2 * horizon;
  }
};

// true iff token i may attend to token j. Context rows see the whole context;
// horizon rows see the context plus horizon positions <= their own. With
// full_prefix_attention off, everything is strictly causal.
Mat build_mask(const DenoiserConfig& cfg);

// 0 / -inf additive bias from a boolean mask.
Mat mask_to_bias(const Mat& mask);

struct DenoiserInput {
  Mat ctx_obs;    // (N+1) x obs_width
  Mat ctx_act;    // N x action_width
  Mat hor_act;    // H x action_width  (noised)
  Mat hor_state;  // H x state_in_width (noised, restricted)
  std::vector<double> cmd;
  std::size_t k_state = 0;
  std::size_t k_action = 0;
  std::optional<Mat> ctx_priv;  // (N+1) x priv_width, repr-align only
};

// Instrumented assembly from domain types; throws on any width mismatch,
// naming the offending token class.
DenoiserInput make_input(const DenoiserConfig& cfg,
                         const ObservationHistory& history,
                         const RestrictedTrajectory& noised,
                         const Command& cmd, std::size_t k_state,
                         std::size_t k_action);

struct DenoiserOutput {
  Mat actions;  // H x action_width
  Mat states;   // H x state_out_width
  // Encoder-output taps for representation alignment (empty unless enabled).
  Mat ctx_obs_features;   // (N+1) x d
  Mat ctx_priv_features;  // (N+1) x d
};

struct DenoiserInputGrads {
  Mat ctx_obs;
  Mat ctx_act;
  Mat hor_act;
  Mat hor_state;
  std::vector<double> cmd;
};

class Denoiser {
 public:
  explicit Denoiser(const DenoiserConfig& cfg);

  const DenoiserConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  void init_params(Rng& rng) { store_.init(rng); }

  DenoiserOutput forward(const DenoiserInput& in);

  // Gradients w.r.t. outputs -> parameter grads (accumulated in the store)
  // plus input grads. d_* may be empty to mean zero. Must follow the
  // matching forward().
  DenoiserInputGrads backward(const Mat& d_actions, const Mat& d_states,
                              const Mat& d_ctx_obs_features = {},
                              const Mat& d_ctx_priv_features = {});

 private:
  void check_input(const DenoiserInput& in) const;

  DenoiserConfig cfg_;
  nn::ParamStore store_;
  nn::Mlp enc_obs_, enc_state_, enc_cmd_;
  nn::Mlp enc_act_;       // single layer
  nn::Mlp enc_priv_;      // repr-align only
  nn::ParamRef time_state_, time_action_;
  std::vector<nn::TransformerLayer> stack_;
  nn::LayerNorm final_ln_;
  nn::Linear head_act_, head_state_;
  Mat mask_bias_;

  // forward caches
  std::size_t cached_k_state_ = 0, cached_k_action_ = 0;
  Mat cmd_in_cache_;
};

}  // namespace scdp
