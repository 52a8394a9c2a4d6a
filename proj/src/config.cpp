#include "scdp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "scdp/hashio.hpp"

namespace scdp {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw std::runtime_error("config section '" + section +
                             "' must be an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw std::runtime_error("unknown key '" + it.key() + "' in section '" +
                               section + "'");
    }
  }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_sim(const json& j, sim::SimParams& p) {
  check_keys(j, "sim",
             {"dt", "m", "inertia", "f_max", "t_max", "c_v", "c_w", "c_theta",
              "g", "l", "theta_fail", "action_delay"});
  get_if(j, "dt", p.dt);
  get_if(j, "m", p.m);
  get_if(j, "inertia", p.inertia);
  get_if(j, "f_max", p.f_max);
  get_if(j, "t_max", p.t_max);
  get_if(j, "c_v", p.c_v);
  get_if(j, "c_w", p.c_w);
  get_if(j, "c_theta", p.c_theta);
  get_if(j, "g", p.g);
  get_if(j, "l", p.l);
  get_if(j, "theta_fail", p.theta_fail);
  get_if(j, "action_delay", p.action_delay);
}

CommandProfileKind profile_from_string(const std::string& s) {
  if (s == "constant") return CommandProfileKind::constant;
  if (s == "piecewise") return CommandProfileKind::piecewise;
  if (s == "reference_tracking") return CommandProfileKind::reference_tracking;
  throw std::runtime_error("unknown command profile '" + s + "'");
}

std::string profile_to_string(CommandProfileKind k) {
  switch (k) {
    case CommandProfileKind::constant: return "constant";
    case CommandProfileKind::piecewise: return "piecewise";
    case CommandProfileKind::reference_tracking: return "reference_tracking";
  }
  return "piecewise";
}

void parse_push(const json& j, sim::PushConfig& p,
                const std::string& section) {
  check_keys(j, section,
             {"enabled", "dv_max", "dw_max", "interval_min", "interval_max"});
  get_if(j, "enabled", p.enabled);
  get_if(j, "dv_max", p.dv_max);
  get_if(j, "dw_max", p.dw_max);
  get_if(j, "interval_min", p.interval_min);
  get_if(j, "interval_max", p.interval_max);
}

void parse_randomization(const json& j, sim::RandomizationConfig& r,
                         const std::string& section) {
  check_keys(j, section, {"mass_frac", "damping_frac", "randomize_delay"});
  get_if(j, "mass_frac", r.mass_frac);
  get_if(j, "damping_frac", r.damping_frac);
  get_if(j, "randomize_delay", r.randomize_delay);
}

void parse_datagen(const json& j, CollectConfig& c) {
  check_keys(j, "datagen",
             {"rollouts", "steps", "sigma_a", "push", "randomization",
              "command_kind", "v_cmd_max", "w_cmd_max", "constant_v",
              "constant_w"});
  get_if(j, "rollouts", c.rollouts);
  get_if(j, "steps", c.steps);
  get_if(j, "sigma_a", c.sigma_a);
  if (j.contains("push")) parse_push(j.at("push"), c.push, "datagen.push");
  if (j.contains("randomization")) {
    parse_randomization(j.at("randomization"), c.randomization,
                        "datagen.randomization");
  }
  if (j.contains("command_kind")) {
    c.command_kind = profile_from_string(j.at("command_kind").get<std::string>());
  }
  get_if(j, "v_cmd_max", c.v_cmd_max);
  get_if(j, "w_cmd_max", c.w_cmd_max);
  get_if(j, "constant_v", c.constant_v);
  get_if(j, "constant_w", c.constant_w);
}

void parse_schedule(const json& j, ScheduleConfig& s,
                    const std::string& section) {
  check_keys(j, section,
             {"steps", "beta_start", "beta_end", "posterior_variance"});
  get_if(j, "steps", s.steps);
  get_if(j, "beta_start", s.beta_start);
  get_if(j, "beta_end", s.beta_end);
  get_if(j, "posterior_variance", s.posterior_variance);
}

void parse_pipe(const json& j, PipelineConfig& p) {
  check_keys(j, "train.pipeline",
             {"context_len", "horizon", "mixed_obs", "restricted", "ctx_align",
              "velocity_feedback", "full_prefix_attention", "repr_align",
              "cmd_kind"});
  get_if(j, "context_len", p.context_len);
  get_if(j, "horizon", p.horizon);
  get_if(j, "mixed_obs", p.mixed_obs);
  get_if(j, "restricted", p.restricted);
  get_if(j, "ctx_align", p.ctx_align);
  get_if(j, "velocity_feedback", p.velocity_feedback);
  get_if(j, "full_prefix_attention", p.full_prefix_attention);
  get_if(j, "repr_align", p.repr_align);
  if (j.contains("cmd_kind")) {
    const std::string s = j.at("cmd_kind").get<std::string>();
    if (s == "velocity") {
      p.cmd_kind = Command::Kind::velocity;
    } else if (s == "motion_reference") {
      p.cmd_kind = Command::Kind::motion_reference;
    } else {
      throw std::runtime_error("unknown cmd_kind '" + s + "'");
    }
  }
}

void parse_train(const json& j, TrainConfig& t) {
  check_keys(j, "train",
             {"pipeline", "layers", "heads", "d_model", "d_ff", "schedule",
              "action_schedule", "batch", "updates", "warmup", "lr_peak",
              "lr_final", "weight_decay", "lambda_cmd", "lambda_repr",
              "action_cutoff", "grad_clip", "divergence_threshold", "seed",
              "log_every"});
  if (j.contains("pipeline")) parse_pipe(j.at("pipeline"), t.pipe);
  get_if(j, "layers", t.layers);
  get_if(j, "heads", t.heads);
  get_if(j, "d_model", t.d_model);
  get_if(j, "d_ff", t.d_ff);
  if (j.contains("schedule")) {
    parse_schedule(j.at("schedule"), t.schedule, "train.schedule");
  }
  if (j.contains("action_schedule")) {
    ScheduleConfig s = t.schedule;
    parse_schedule(j.at("action_schedule"), s, "train.action_schedule");
    t.action_schedule = s;
  }
  get_if(j, "batch", t.batch);
  get_if(j, "updates", t.updates);
  get_if(j, "warmup", t.warmup);
  get_if(j, "lr_peak", t.lr_peak);
  get_if(j, "lr_final", t.lr_final);
  get_if(j, "weight_decay", t.weight_decay);
  get_if(j, "lambda_cmd", t.lambda_cmd);
  get_if(j, "lambda_repr", t.lambda_repr);
  get_if(j, "action_cutoff", t.action_cutoff);
  get_if(j, "grad_clip", t.grad_clip);
  get_if(j, "divergence_threshold", t.divergence_threshold);
  get_if(j, "seed", t.seed);
  get_if(j, "log_every", t.log_every);
}

void parse_eval(const json& j, EvalConfig& e) {
  check_keys(j, "eval",
             {"trials", "duration_s", "seed", "randomize", "randomization",
              "push"});
  get_if(j, "trials", e.trials);
  get_if(j, "duration_s", e.duration_s);
  get_if(j, "seed", e.seed);
  get_if(j, "randomize", e.randomize);
  if (j.contains("randomization")) {
    parse_randomization(j.at("randomization"), e.randomization,
                        "eval.randomization");
  }
  if (j.contains("push")) parse_push(j.at("push"), e.push, "eval.push");
}

json push_to_json(const sim::PushConfig& p) {
  return {{"enabled", p.enabled},
          {"dv_max", p.dv_max},
          {"dw_max", p.dw_max},
          {"interval_min", p.interval_min},
          {"interval_max", p.interval_max}};
}

json randomization_to_json(const sim::RandomizationConfig& r) {
  return {{"mass_frac", r.mass_frac},
          {"damping_frac", r.damping_frac},
          {"randomize_delay", r.randomize_delay}};
}

json schedule_to_json(const ScheduleConfig& s) {
  return {{"steps", s.steps},
          {"beta_start", s.beta_start},
          {"beta_end", s.beta_end},
          {"posterior_variance", s.posterior_variance}};
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  check_keys(j, "<root>", {"sim", "datagen", "train", "eval"});
  RunConfig cfg;
  if (j.contains("sim")) parse_sim(j.at("sim"), cfg.sim);
  if (j.contains("datagen")) parse_datagen(j.at("datagen"), cfg.datagen);
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);
  if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval);
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  const auto& p = cfg.sim;
  const auto& d = cfg.datagen;
  const auto& t = cfg.train;
  const auto& e = cfg.eval;
  json j;
  j["sim"] = {{"dt", p.dt},       {"m", p.m},
              {"inertia", p.inertia}, {"f_max", p.f_max},
              {"t_max", p.t_max}, {"c_v", p.c_v},
              {"c_w", p.c_w},     {"c_theta", p.c_theta},
              {"g", p.g},         {"l", p.l},
              {"theta_fail", p.theta_fail},
              {"action_delay", p.action_delay}};
  j["datagen"] = {{"rollouts", d.rollouts},
                  {"steps", d.steps},
                  {"sigma_a", d.sigma_a},
                  {"push", push_to_json(d.push)},
                  {"randomization", randomization_to_json(d.randomization)},
                  {"command_kind", profile_to_string(d.command_kind)},
                  {"v_cmd_max", d.v_cmd_max},
                  {"w_cmd_max", d.w_cmd_max},
                  {"constant_v", d.constant_v},
                  {"constant_w", d.constant_w}};
  json pipe = {{"context_len", t.pipe.context_len},
               {"horizon", t.pipe.horizon},
               {"mixed_obs", t.pipe.mixed_obs},
               {"restricted", t.pipe.restricted},
               {"ctx_align", t.pipe.ctx_align},
               {"velocity_feedback", t.pipe.velocity_feedback},
               {"full_prefix_attention", t.pipe.full_prefix_attention},
               {"repr_align", t.pipe.repr_align},
               {"cmd_kind", t.pipe.cmd_kind == Command::Kind::velocity
                                ? "velocity"
                                : "motion_reference"}};
  j["train"] = {{"pipeline", pipe},
                {"layers", t.layers},
                {"heads", t.heads},
                {"d_model", t.d_model},
                {"d_ff", t.d_ff},
                {"schedule", schedule_to_json(t.schedule)},
                {"batch", t.batch},
                {"updates", t.updates},
                {"warmup", t.warmup},
                {"lr_peak", t.lr_peak},
                {"lr_final", t.lr_final},
                {"weight_decay", t.weight_decay},
                {"lambda_cmd", t.lambda_cmd},
                {"lambda_repr", t.lambda_repr},
                {"action_cutoff", t.action_cutoff},
                {"grad_clip", t.grad_clip},
                {"divergence_threshold", t.divergence_threshold},
                {"seed", t.seed},
                {"log_every", t.log_every}};
  if (t.action_schedule) {
    j["train"]["action_schedule"] = schedule_to_json(*t.action_schedule);
  }
  j["eval"] = {{"trials", e.trials},
               {"duration_s", e.duration_s},
               {"seed", e.seed},
               {"randomize", e.randomize},
               {"randomization", randomization_to_json(e.randomization)},
               {"push", push_to_json(e.push)}};
  return j.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  // nlohmann keeps object keys sorted, so dump() is canonical
  return content_hash(config_to_json(cfg));
}

}  // namespace scdp
