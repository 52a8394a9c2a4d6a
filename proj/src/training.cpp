#include "scdp/training.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scdp {

TrainingExample make_example(const RolloutRecord& rollout, std::size_t t,
                             const PipelineConfig& pipe) {
  const std::size_t N = pipe.context_len;
  const std::size_t H = pipe.horizon;
  if (t < N || t + H >= rollout.length()) {
    throw std::out_of_range("make_example: window does not fit at t=" +
                            std::to_string(t));
  }
  TrainingExample ex;
  const std::size_t ow = pipe.obs_width();
  ex.ctx_obs = Mat(N + 1, ow);
  for (std::size_t i = 0; i <= N; ++i) {
    OnboardObservation o = rollout.obs[t - N + i];
    if (!pipe.velocity_feedback) o = o.without_velocity();
    o.flatten_for_model(ex.ctx_obs.row(i));
  }
  ex.ctx_act = Mat(N, kActionWidth);
  for (std::size_t i = 0; i < N; ++i) {
    // context distribution alignment: use the actually-executed noisy
    // actions; the misaligned variant substitutes the expert means
    const Action& a = pipe.ctx_align ? rollout.executed[t - N + i]
                                     : rollout.mean[t - N + i];
    ex.ctx_act(i, 0) = a.drive;
    ex.ctx_act(i, 1) = a.steer;
  }

  ex.target_act = Mat(H, kActionWidth);
  for (std::size_t i = 0; i < H; ++i) {
    ex.target_act(i, 0) = rollout.executed[t + i].drive;
    ex.target_act(i, 1) = rollout.executed[t + i].steer;
  }
  const std::size_t sw = pipe.state_out_width();
  ex.target_state = Mat(H, sw);
  for (std::size_t i = 0; i < H; ++i) {
    if (pipe.mixed_obs) {
      double buf[kStateWidth];
      rollout.states[t + 1 + i].flatten(buf);
      std::copy(buf, buf + kStateWidth, ex.target_state.row(i));
    } else {
      OnboardObservation o = rollout.obs[t + 1 + i];
      if (!pipe.velocity_feedback) o = o.without_velocity();
      // target side: plain copy, not the instrumented model-input path
      double buf[kObsWidthV];
      buf[0] = o.yaw_rate;
      buf[1] = o.joint_angle;
      buf[2] = o.joint_rate;
      buf[3] = o.grav_sin;
      buf[4] = o.grav_cos;
      if (o.has_base_speed) buf[5] = o.base_speed;
      std::copy(buf, buf + sw, ex.target_state.row(i));
    }
  }

  // model-input state channels (v_base dropped when restricted)
  const std::size_t siw = pipe.state_in_width();
  ex.input_state_clean = Mat(H, siw);
  for (std::size_t i = 0; i < H; ++i) {
    const double* src = ex.target_state.row(i);
    double* dst = ex.input_state_clean.row(i);
    if (siw == sw) {
      std::copy(src, src + sw, dst);
    } else {
      std::size_t j = 0;
      for (std::size_t c = 0; c < sw; ++c) {
        if (c == kVbaseIndex) continue;
        dst[j++] = src[c];
      }
    }
  }

  const Command& c = rollout.commands[t];
  if (c.width() != pipe.cmd_width()) {
    throw std::invalid_argument("make_example: command width mismatch");
  }
  ex.cmd = c.values;
  ex.cmd_kind = c.kind;

  if (pipe.repr_align) {
    Mat priv(N + 1, kStateWidth);
    for (std::size_t i = 0; i <= N; ++i) {
      rollout.states[t - N + i].flatten(priv.row(i));
    }
    ex.ctx_priv = std::move(priv);
  }
  return ex;
}

DenoiserConfig TrainConfig::model_config() const {
  DenoiserConfig mc;
  mc.layers = layers;
  mc.heads = heads;
  mc.d_model = d_model;
  mc.d_ff = d_ff;
  mc.context_len = pipe.context_len;
  mc.horizon = pipe.horizon;
  mc.diffusion_steps = schedule.steps;
  mc.obs_width = pipe.obs_width();
  mc.action_width = kActionWidth;
  mc.state_in_width = pipe.state_in_width();
  mc.state_out_width = pipe.state_out_width();
  mc.cmd_width = pipe.cmd_width();
  mc.priv_width = kStateWidth;
  mc.full_prefix_attention = pipe.full_prefix_attention;
  mc.repr_align = pipe.repr_align;
  return mc;
}

double TrainConfig::lr_at(std::size_t u) const {
  if (warmup > 0 && u <= warmup) {
    return lr_peak * static_cast<double>(u) / static_cast<double>(warmup);
  }
  const double span = static_cast<double>(updates - warmup);
  const double prog =
      span > 0.0 ? static_cast<double>(u - warmup) / span : 1.0;
  return lr_final +
         0.5 * (lr_peak - lr_final) *
             (1.0 + std::cos(3.14159265358979323846 * std::min(prog, 1.0)));
}

namespace {

// d(1 - cos(a,b)) / da accumulated into da; returns 1 - cos similarity.
double cosine_loss_row(const double* a, const double* b, std::size_t n,
                       double* da, double* db, double scale,
                       std::size_t* zero_counter) {
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na < 1e-12 || nb < 1e-12) {
    ++*zero_counter;
    return 1.0;  // similarity treated as 0; no usable gradient
  }
  const double c = ab / (na * nb);
  for (std::size_t i = 0; i < n; ++i) {
    da[i] += scale * -(b[i] / (na * nb) - c * a[i] / aa);
    db[i] += scale * -(a[i] / (na * nb) - c * b[i] / bb);
  }
  return 1.0 - c;
}

}  // namespace

LossBreakdown compute_loss(const TrainingExample& ex, Denoiser& model,
                           const DualSchedule& schedules, Rng& rng,
                           const TrainConfig& cfg) {
  const auto& mc = model.config();
  const std::size_t H = mc.horizon;
  const auto [k_state, k_action] = schedules.sample_training_steps(rng);

  DenoiserInput in;
  in.ctx_obs = ex.ctx_obs;
  in.ctx_act = ex.ctx_act;
  in.k_state = k_state;
  in.k_action = k_action;
  in.cmd = ex.cmd;
  in.ctx_priv = ex.ctx_priv;

  // forward-noise the restricted target, per token class
  in.hor_act = Mat(H, mc.action_width);
  {
    std::vector<double> eps(ex.target_act.size());
    for (auto& e : eps) e = rng.normal();
    schedules.action.forward_noise(
        std::span(ex.target_act.data(), ex.target_act.size()), k_action,
        eps, std::span(in.hor_act.data(), in.hor_act.size()));
  }
  in.hor_state = Mat(H, mc.state_in_width);
  {
    std::vector<double> eps(ex.input_state_clean.size());
    for (auto& e : eps) e = rng.normal();
    schedules.state.forward_noise(
        std::span(ex.input_state_clean.data(), ex.input_state_clean.size()),
        k_state, eps, std::span(in.hor_state.data(), in.hor_state.size()));
  }

  DenoiserOutput out = model.forward(in);

  LossBreakdown lb;
  Mat d_act(H, mc.action_width);
  Mat d_state(H, mc.state_out_width);

  // weighted MSE against the full target; action elements beyond the
  // cutoff step carry zero weight
  double wsum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < H; ++i) {
    const double w = i < cfg.action_cutoff ? 1.0 : 0.0;
    for (std::size_t j = 0; j < mc.action_width; ++j) {
      const double r = out.actions(i, j) - ex.target_act(i, j);
      sq += w * r * r;
      wsum += w;
      d_act(i, j) = w * r;  // scaled below
    }
    for (std::size_t j = 0; j < mc.state_out_width; ++j) {
      const double r = out.states(i, j) - ex.target_state(i, j);
      sq += r * r;
      wsum += 1.0;
      d_state(i, j) = r;
    }
  }
  lb.ddpm_res = sq / wsum;
  const double mse_scale = 2.0 / wsum;
  for (std::size_t i = 0; i < d_act.size(); ++i) d_act.data()[i] *= mse_scale;
  for (std::size_t i = 0; i < d_state.size(); ++i) {
    d_state.data()[i] *= mse_scale;
  }

  // command tracking: || c - mean predicted base velocity ||^2 using the
  // predicted v_base and yaw-rate channels (velocity commands on the
  // privileged-state target only)
  if (ex.cmd_kind == Command::Kind::velocity && cfg.lambda_cmd > 0.0 &&
      mc.state_out_width == kStateWidth) {
    double mean_v = 0.0, mean_w = 0.0;
    for (std::size_t i = 0; i < H; ++i) {
      mean_v += out.states(i, kVbaseIndex);
      mean_w += out.states(i, 0);
    }
    mean_v /= static_cast<double>(H);
    mean_w /= static_cast<double>(H);
    const double ev = mean_v - ex.cmd[0];
    const double ew = mean_w - ex.cmd[1];
    lb.cmd = ev * ev + ew * ew;
    const double gv = cfg.lambda_cmd * 2.0 * ev / static_cast<double>(H);
    const double gw = cfg.lambda_cmd * 2.0 * ew / static_cast<double>(H);
    for (std::size_t i = 0; i < H; ++i) {
      d_state(i, kVbaseIndex) += gv;
      d_state(i, 0) += gw;
    }
  }

  Mat d_fo, d_fs;
  if (mc.repr_align && ex.ctx_priv.has_value()) {
    const std::size_t rows = out.ctx_obs_features.rows();
    d_fo = Mat(rows, mc.d_model);
    d_fs = Mat(rows, mc.d_model);
    const double scale = cfg.lambda_repr / static_cast<double>(rows);
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      acc += cosine_loss_row(out.ctx_obs_features.row(i),
                             out.ctx_priv_features.row(i), mc.d_model,
                             d_fo.row(i), d_fs.row(i), scale,
                             &lb.zero_norm_features);
    }
    lb.repr = acc / static_cast<double>(rows);
  }

  lb.total = lb.ddpm_res + cfg.lambda_cmd * lb.cmd + cfg.lambda_repr * lb.repr;
  if (!std::isfinite(lb.total)) {
    std::ostringstream os;
    os << "nonfinite loss: ddpm_res=" << lb.ddpm_res << " cmd=" << lb.cmd
       << " repr=" << lb.repr;
    throw std::runtime_error(os.str());
  }

  model.backward(d_act, d_state, d_fo, d_fs);
  return lb;
}

void AdamW::step(std::vector<double>& params, const std::vector<double>& grads,
                 double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i] * grads[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * (mhat / (std::sqrt(vhat) + kEps) + wd_ * params[i]);
  }
}

ExampleSampler dataset_sampler(const RolloutDataset& ds,
                               const PipelineConfig& pipe) {
  // index the usable (rollout, window-count) pairs once
  std::vector<std::pair<std::size_t, std::size_t>> usable;  // (idx, n_windows)
  std::size_t total = 0;
  const std::size_t need = pipe.context_len + pipe.horizon + 1;
  for (std::size_t i = 0; i < ds.rollouts.size(); ++i) {
    const std::size_t len = ds.rollouts[i].length();
    if (len >= need) {
      const std::size_t n = len - need + 1;
      usable.emplace_back(i, n);
      total += n;
    }
  }
  if (usable.empty()) {
    throw std::runtime_error("dataset has no rollout long enough for N+H+1");
  }
  const auto* rollouts = &ds.rollouts;
  return [usable, total, rollouts, pipe](Rng& rng) {
    std::size_t pick = rng.uniform_index(total);
    for (const auto& [idx, n] : usable) {
      if (pick < n) {
        return make_example((*rollouts)[idx], pipe.context_len + pick, pipe);
      }
      pick -= n;
    }
    throw std::logic_error("sampler index out of range");
  };
}

TrainResult train_model(const ExampleSampler& sampler, const TrainConfig& cfg) {
  if (cfg.dropout != 0.0) {
    throw std::invalid_argument("dropout > 0 is not supported");
  }
  TrainResult res;
  res.model = std::make_unique<Denoiser>(cfg.model_config());
  Rng rng(Rng::seed_mix(cfg.seed, 0x747261696eULL));
  res.model->init_params(rng);
  DualSchedule schedules =
      cfg.action_schedule.has_value()
          ? DualSchedule(cfg.schedule, *cfg.action_schedule)
          : DualSchedule(cfg.schedule);

  auto& store = res.model->params();
  AdamW opt(store.size(), cfg.weight_decay);

  for (std::size_t u = 1; u <= cfg.updates; ++u) {
    store.zero_grads();
    LossBreakdown acc;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      TrainingExample ex = sampler(rng);
      const LossBreakdown lb = compute_loss(ex, *res.model, schedules, rng, cfg);
      acc.total += lb.total;
      acc.ddpm_res += lb.ddpm_res;
      acc.cmd += lb.cmd;
      acc.repr += lb.repr;
    }
    const double inv_b = 1.0 / static_cast<double>(cfg.batch);
    acc.total *= inv_b;
    acc.ddpm_res *= inv_b;
    acc.cmd *= inv_b;
    acc.repr *= inv_b;
    kernels::scale(store.grads().data(), inv_b, store.grads().size());

    if (acc.total > cfg.divergence_threshold) {
      std::ostringstream os;
      os << "training diverged at step " << u << ": loss=" << acc.total
         << " ddpm_res=" << acc.ddpm_res << " cmd=" << acc.cmd;
      throw std::runtime_error(os.str());
    }

    if (cfg.grad_clip > 0.0) {
      const double nrm = std::sqrt(kernels::dot(
          store.grads().data(), store.grads().data(), store.grads().size()));
      if (nrm > cfg.grad_clip) {
        kernels::scale(store.grads().data(), cfg.grad_clip / nrm,
                       store.grads().size());
      }
    }
    const double lr = cfg.lr_at(u);
    opt.step(store.values(), store.grads(), lr);

    if (u % cfg.log_every == 0 || u == 1 || u == cfg.updates) {
      res.log.push_back({u, acc.total, acc.ddpm_res, acc.cmd, acc.repr, lr});
    }
  }
  return res;
}

}  // namespace scdp
