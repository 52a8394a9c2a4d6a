#include "scdp/denoiser.hpp"

#include <limits>
#include <stdexcept>

namespace scdp {

Mat build_mask(const DenoiserConfig& cfg) {
  const std::size_t nc = 2 * cfg.context_len + 1;
  const std::size_t L = cfg.token_count();
  Mat m(L, L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      bool ok;
      if (cfg.full_prefix_attention) {
        if (i < nc) {
          ok = j < nc;  // context rows: whole context, no horizon
        } else {
          ok = j < nc || j <= i;  // horizon rows: context + causal horizon
        }
      } else {
        ok = j <= i;  // plain causal everywhere
      }
      m(i, j) = ok ? 1.0 : 0.0;
    }
  }
  return m;
}

Mat mask_to_bias(const Mat& mask) {
  Mat b(mask.rows(), mask.cols());
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    b.data()[i] = mask.data()[i] != 0.0 ? 0.0 : neg_inf;
  }
  return b;
}

DenoiserInput make_input(const DenoiserConfig& cfg,
                         const ObservationHistory& history,
                         const RestrictedTrajectory& noised,
                         const Command& cmd, std::size_t k_state,
                         std::size_t k_action) {
  history.check();
  if (history.context_length() != cfg.context_len) {
    throw std::invalid_argument("make_input: context length mismatch");
  }
  if (noised.horizon() != cfg.horizon) {
    throw std::invalid_argument("make_input: horizon mismatch");
  }
  DenoiserInput in;
  in.ctx_obs = Mat(cfg.context_len + 1, cfg.obs_width);
  for (std::size_t i = 0; i <= cfg.context_len; ++i) {
    if (history.observations[i].width() != cfg.obs_width) {
      throw std::invalid_argument("make_input: ctx_obs token width mismatch");
    }
    history.observations[i].flatten_for_model(in.ctx_obs.row(i));
  }
  in.ctx_act = Mat(cfg.context_len, cfg.action_width);
  for (std::size_t i = 0; i < cfg.context_len; ++i) {
    const auto a = history.actions[i].flat();
    in.ctx_act(i, 0) = a[0];
    in.ctx_act(i, 1) = a[1];
  }
  in.hor_act = Mat(cfg.horizon, cfg.action_width);
  in.hor_state = Mat(cfg.horizon, cfg.state_in_width);
  for (std::size_t i = 0; i < cfg.horizon; ++i) {
    const auto a = noised.actions[i].flat();
    in.hor_act(i, 0) = a[0];
    in.hor_act(i, 1) = a[1];
    if (noised.states[i].size() != cfg.state_in_width) {
      throw std::invalid_argument("make_input: hor_state token width mismatch");
    }
    for (std::size_t j = 0; j < cfg.state_in_width; ++j) {
      in.hor_state(i, j) = noised.states[i][j];
    }
  }
  if (cmd.width() != cfg.cmd_width) {
    throw std::invalid_argument("make_input: command width mismatch");
  }
  in.cmd = cmd.values;
  in.k_state = k_state;
  in.k_action = k_action;
  return in;
}

Denoiser::Denoiser(const DenoiserConfig& cfg) : cfg_(cfg) {
  enc_obs_ = nn::Mlp(store_, "enc_obs", cfg.obs_width, cfg.d_model, 2);
  enc_act_ = nn::Mlp(store_, "enc_act", cfg.action_width, cfg.d_model, 1);
  enc_state_ = nn::Mlp(store_, "enc_state", cfg.state_in_width, cfg.d_model, 2);
  enc_cmd_ = nn::Mlp(store_, "enc_cmd", cfg.cmd_width, cfg.d_model, 2);
  if (cfg.repr_align) {
    enc_priv_ = nn::Mlp(store_, "enc_priv", cfg.priv_width, cfg.d_model, 2);
  }
  time_state_ = store_.add("time_state", cfg.diffusion_steps, cfg.d_model);
  time_action_ = store_.add("time_action", cfg.diffusion_steps, cfg.d_model);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    stack_.emplace_back(store_, "layer" + std::to_string(l), cfg.d_model,
                        cfg.heads, cfg.d_ff);
  }
  final_ln_ = nn::LayerNorm(store_, "final", cfg.d_model);
  head_act_ = nn::Linear(store_, "head_act", cfg.d_model, cfg.action_width);
  head_state_ = nn::Linear(store_, "head_state", cfg.d_model,
                           cfg.state_out_width);
  mask_bias_ = mask_to_bias(build_mask(cfg));
}

void Denoiser::check_input(const DenoiserInput& in) const {
  auto expect = [](const Mat& m, std::size_t r, std::size_t c,
                   const char* what) {
    if (m.rows() != r || m.cols() != c) {
      throw std::invalid_argument(std::string("denoiser input: bad shape for ") +
                                  what);
    }
  };
  expect(in.ctx_obs, cfg_.context_len + 1, cfg_.obs_width, "ctx_obs");
  expect(in.ctx_act, cfg_.context_len, cfg_.action_width, "ctx_act");
  expect(in.hor_act, cfg_.horizon, cfg_.action_width, "hor_act");
  expect(in.hor_state, cfg_.horizon, cfg_.state_in_width, "hor_state");
  if (in.cmd.size() != cfg_.cmd_width) {
    throw std::invalid_argument("denoiser input: bad command width");
  }
  if (in.k_state >= cfg_.diffusion_steps || in.k_action >= cfg_.diffusion_steps) {
    throw std::out_of_range("denoiser input: diffusion step out of range");
  }
}

DenoiserOutput Denoiser::forward(const DenoiserInput& in) {
  check_input(in);
  const std::size_t N = cfg_.context_len;
  const std::size_t H = cfg_.horizon;
  const std::size_t d = cfg_.d_model;
  const std::size_t nc = 2 * N + 1;
  const std::size_t L = cfg_.token_count();
  cached_k_state_ = in.k_state;
  cached_k_action_ = in.k_action;

  Mat obs_emb = enc_obs_.forward(in.ctx_obs);        // (N+1) x d
  // enc_act_ is shared between context and horizon actions; one combined
  // forward keeps a single cache for backward.
  Mat act_all(N + H, cfg_.action_width);
  for (std::size_t i = 0; i < N; ++i) {
    std::copy(in.ctx_act.row(i), in.ctx_act.row(i) + cfg_.action_width,
              act_all.row(i));
  }
  for (std::size_t i = 0; i < H; ++i) {
    std::copy(in.hor_act.row(i), in.hor_act.row(i) + cfg_.action_width,
              act_all.row(N + i));
  }
  Mat act_emb = enc_act_.forward(act_all);           // (N+H) x d
  Mat state_emb = enc_state_.forward(in.hor_state);  // H x d

  Mat cmd_in(1, cfg_.cmd_width);
  std::copy(in.cmd.begin(), in.cmd.end(), cmd_in.row(0));
  cmd_in_cache_ = cmd_in;
  Mat cmd_emb = enc_cmd_.forward(cmd_in);            // 1 x d

  // conditioning vector e = time_state[k_s] + time_action[k_a] + phi_c(cmd)
  std::vector<double> cond(d);
  const double* ts = store_.values(time_state_) + in.k_state * d;
  const double* ta = store_.values(time_action_) + in.k_action * d;
  for (std::size_t j = 0; j < d; ++j) cond[j] = ts[j] + ta[j] + cmd_emb(0, j);

  Mat tokens(L, d);
  std::vector<double> pos(d);
  for (std::size_t idx = 0; idx < L; ++idx) {
    const double* src;
    if (idx < nc) {
      src = (idx % 2 == 0) ? obs_emb.row(idx / 2) : act_emb.row(idx / 2);
    } else {
      const std::size_t hi = (idx - nc) / 2;
      src = ((idx - nc) % 2 == 0) ? act_emb.row(N + hi) : state_emb.row(hi);
    }
    double* t = tokens.row(idx);
    std::copy(src, src + d, t);
    nn::sinusoidal_embedding(idx, d, pos.data());
    const bool conditioned = cfg_.condition_context_tokens || idx >= nc;
    for (std::size_t j = 0; j < d; ++j) {
      t[j] += pos[j] + (conditioned ? cond[j] : 0.0);
    }
  }

  Mat h = tokens;
  for (auto& layer : stack_) h = layer.forward(h, mask_bias_);
  h = final_ln_.forward(h);

  // decode horizon tokens through per-class heads
  Mat hor_act_h(H, d), hor_state_h(H, d);
  for (std::size_t i = 0; i < H; ++i) {
    std::copy(h.row(nc + 2 * i), h.row(nc + 2 * i) + d, hor_act_h.row(i));
    std::copy(h.row(nc + 2 * i + 1), h.row(nc + 2 * i + 1) + d,
              hor_state_h.row(i));
  }
  DenoiserOutput out;
  out.actions = head_act_.forward(hor_act_h);
  out.states = head_state_.forward(hor_state_h);
  if (cfg_.repr_align) {
    out.ctx_obs_features = obs_emb;
    if (in.ctx_priv.has_value()) {
      out.ctx_priv_features = enc_priv_.forward(*in.ctx_priv);
    }
  }
  return out;
}

DenoiserInputGrads Denoiser::backward(const Mat& d_actions, const Mat& d_states,
                                      const Mat& d_ctx_obs_features,
                                      const Mat& d_ctx_priv_features) {
  const std::size_t N = cfg_.context_len;
  const std::size_t H = cfg_.horizon;
  const std::size_t d = cfg_.d_model;
  const std::size_t nc = 2 * N + 1;
  const std::size_t L = cfg_.token_count();

  Mat d_hor_act_h = head_act_.backward(
      d_actions.size() ? d_actions : Mat(H, cfg_.action_width));
  Mat d_hor_state_h = head_state_.backward(
      d_states.size() ? d_states : Mat(H, cfg_.state_out_width));

  Mat dh(L, d);
  for (std::size_t i = 0; i < H; ++i) {
    std::copy(d_hor_act_h.row(i), d_hor_act_h.row(i) + d, dh.row(nc + 2 * i));
    std::copy(d_hor_state_h.row(i), d_hor_state_h.row(i) + d,
              dh.row(nc + 2 * i + 1));
  }
  dh = final_ln_.backward(dh);
  for (auto it = stack_.rbegin(); it != stack_.rend(); ++it) {
    dh = it->backward(dh);
  }

  // scatter token grads back to embeddings and the conditioning vector
  Mat d_obs_emb(N + 1, d);
  Mat d_act_emb(N + H, d);
  Mat d_state_emb(H, d);
  std::vector<double> d_cond(d, 0.0);
  for (std::size_t idx = 0; idx < L; ++idx) {
    const double* g = dh.row(idx);
    double* dst;
    if (idx < nc) {
      dst = (idx % 2 == 0) ? d_obs_emb.row(idx / 2) : d_act_emb.row(idx / 2);
    } else {
      const std::size_t hi = (idx - nc) / 2;
      dst = ((idx - nc) % 2 == 0) ? d_act_emb.row(N + hi)
                                  : d_state_emb.row(hi);
    }
    for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
    if (cfg_.condition_context_tokens || idx >= nc) {
      for (std::size_t j = 0; j < d; ++j) d_cond[j] += g[j];
    }
  }

  // conditioning: time tables and command encoder
  double* g_ts = store_.grads(time_state_) + cached_k_state_ * d;
  double* g_ta = store_.grads(time_action_) + cached_k_action_ * d;
  for (std::size_t j = 0; j < d; ++j) {
    g_ts[j] += d_cond[j];
    g_ta[j] += d_cond[j];
  }
  Mat d_cmd_emb(1, d);
  std::copy(d_cond.begin(), d_cond.end(), d_cmd_emb.row(0));
  Mat d_cmd_in = enc_cmd_.backward(d_cmd_emb);

  if (cfg_.repr_align && d_ctx_obs_features.size()) {
    for (std::size_t i = 0; i < d_obs_emb.size(); ++i) {
      d_obs_emb.data()[i] += d_ctx_obs_features.data()[i];
    }
  }

  DenoiserInputGrads grads;
  grads.ctx_obs = enc_obs_.backward(d_obs_emb);
  Mat d_act_all = enc_act_.backward(d_act_emb);
  grads.ctx_act = Mat(N, cfg_.action_width);
  grads.hor_act = Mat(H, cfg_.action_width);
  for (std::size_t i = 0; i < N; ++i) {
    std::copy(d_act_all.row(i), d_act_all.row(i) + cfg_.action_width,
              grads.ctx_act.row(i));
  }
  for (std::size_t i = 0; i < H; ++i) {
    std::copy(d_act_all.row(N + i), d_act_all.row(N + i) + cfg_.action_width,
              grads.hor_act.row(i));
  }
  grads.hor_state = enc_state_.backward(d_state_emb);
  grads.cmd.assign(d_cmd_in.row(0), d_cmd_in.row(0) + cfg_.cmd_width);

  if (cfg_.repr_align && d_ctx_priv_features.size()) {
    enc_priv_.backward(d_ctx_priv_features);
  }
  return grads;
}

}  // namespace scdp
