#include "scdp/datagen.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "scdp/hashio.hpp"

namespace scdp {
namespace {

using nlohmann::json;
using sim::SimState;

constexpr std::size_t kSimWidth = 7;
constexpr char kMagic[5] = {'S', 'C', 'D', 'S', '1'};

std::vector<Command> reference_commands(const std::vector<Command>& vel_profile,
                                        const CollectConfig& cfg,
                                        const std::vector<SimState>& actual) {
  // Reference triple (theta_ref, theta_dot_ref, dpsi) taken from a clean
  // nominal-parameter replay of the same velocity profile; the noisy rollout
  // drifts from it, which is what gives dpsi signal.
  sim::SimParams nominal;
  SimState s;
  std::vector<Command> out;
  out.reserve(actual.size());
  for (std::size_t t = 0; t < actual.size(); ++t) {
    out.push_back(Command::motion_reference(
        s.theta, s.theta_dot, wrap_angle(s.psi - actual[t].psi)));
    const Action a = sim::expert_action(s, vel_profile[t]);
    s = sim::step(s, a, nominal);
  }
  (void)cfg;
  return out;
}

}  // namespace

std::vector<Command> command_profile(CommandProfileKind kind,
                                     const CollectConfig& cfg,
                                     std::size_t steps, double dt, Rng& rng) {
  std::vector<Command> out;
  out.reserve(steps);
  switch (kind) {
    case CommandProfileKind::constant:
      out.assign(steps, Command::velocity(cfg.constant_v, cfg.constant_w));
      break;
    case CommandProfileKind::reference_tracking:
      // velocity profile used to synthesize the reference; piecewise shape
    case CommandProfileKind::piecewise: {
      std::size_t t = 0;
      while (t < steps) {
        const double seg = rng.uniform(2.0, 4.0);
        const auto seg_steps =
            static_cast<std::size_t>(seg / dt + 0.5);
        const Command c = Command::velocity(
            rng.uniform(-cfg.v_cmd_max, cfg.v_cmd_max),
            rng.uniform(-cfg.w_cmd_max, cfg.w_cmd_max));
        for (std::size_t i = 0; i < seg_steps && t < steps; ++i, ++t) {
          out.push_back(c);
        }
      }
      break;
    }
  }
  return out;
}

RolloutDataset collect(const CollectConfig& cfg, std::uint64_t seed) {
  RolloutDataset ds;
  ds.config = cfg;
  ds.seed = seed;
  for (std::size_t i = 0; i < cfg.rollouts; ++i) {
    Rng rng(Rng::seed_mix(seed, i));
    RolloutRecord r;
    r.seed = Rng::seed_mix(seed, i);
    r.params = sim::randomize_params(sim::SimParams{}, cfg.randomization, rng);
    const auto vel_profile =
        command_profile(cfg.command_kind, cfg, cfg.steps, r.params.dt, rng);
    sim::PushSchedule pushes(cfg.push, rng.fork(0x70757368));

    SimState s;
    s.theta = rng.uniform(-0.05, 0.05);  // small pose diversity at start
    std::vector<Action> delay_buf(r.params.action_delay, Action{});
    bool diverged = false;

    std::vector<SimState> sim_states;
    std::vector<Action> executed, mean_actions;
    std::vector<std::uint8_t> push_flags;
    for (std::size_t t = 0; t < cfg.steps; ++t) {
      bool pushed = false;
      if (auto imp = pushes.poll(double(t) * r.params.dt, r.params.dt)) {
        s = sim::apply_push(s, imp->first, imp->second, r.params);
        pushed = true;
      }
      sim_states.push_back(s);
      push_flags.push_back(pushed ? 1 : 0);

      Action m = sim::expert_action(s, vel_profile[t]);
      Action commanded{m.drive + cfg.sigma_a * rng.normal(),
                       m.steer + cfg.sigma_a * rng.normal()};
      commanded = commanded.clipped();
      // action delay: the sim consumes the action commanded `delay` steps ago
      Action applied = commanded;
      if (!delay_buf.empty()) {
        applied = delay_buf.front();
        delay_buf.erase(delay_buf.begin());
        delay_buf.push_back(commanded);
      }
      executed.push_back(applied);
      mean_actions.push_back(m);

      SimState next;
      try {
        next = sim::step(s, applied, r.params);
      } catch (const std::exception&) {
        diverged = true;
        break;
      }
      s = next;
      if (sim::fallen(s, r.params)) {
        r.fell = true;
        break;
      }
    }
    if (diverged) {
      ds.discarded++;
      continue;
    }

    r.sim_states = std::move(sim_states);
    r.executed = std::move(executed);
    r.mean = std::move(mean_actions);
    r.push_flags = std::move(push_flags);
    for (const auto& st : r.sim_states) {
      r.states.push_back(sim::privileged(st, r.params));
      r.obs.push_back(sim::observe(st, true));
    }
    if (cfg.command_kind == CommandProfileKind::reference_tracking) {
      r.commands = reference_commands(vel_profile, cfg, r.sim_states);
    } else {
      r.commands.assign(vel_profile.begin(),
                        vel_profile.begin() + r.sim_states.size());
    }
    ds.rollouts.push_back(std::move(r));
  }
  return ds;
}

namespace {

void put_f32(std::string& out, double v) {
  const float f = static_cast<float>(v);
  out.append(reinterpret_cast<const char*>(&f), 4);
}
void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), 4);
}
void put_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), 8);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (pos + n > buf.size()) {
      throw std::runtime_error("SCDS1: truncated blob at byte offset " +
                               std::to_string(pos));
    }
  }
  float f32() {
    need(4);
    float v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
};

void sim_state_put(std::string& out, const SimState& s) {
  put_f32(out, s.x);
  put_f32(out, s.y);
  put_f32(out, s.psi);
  put_f32(out, s.v);
  put_f32(out, s.omega);
  put_f32(out, s.theta);
  put_f32(out, s.theta_dot);
}

SimState sim_state_get(Reader& r) {
  SimState s;
  s.x = r.f32();
  s.y = r.f32();
  s.psi = r.f32();
  s.v = r.f32();
  s.omega = r.f32();
  s.theta = r.f32();
  s.theta_dot = r.f32();
  return s;
}

json collect_cfg_to_json(const CollectConfig& c) {
  return {{"rollouts", c.rollouts},
          {"steps", c.steps},
          {"sigma_a", c.sigma_a},
          {"push",
           {{"enabled", c.push.enabled},
            {"dv_max", c.push.dv_max},
            {"dw_max", c.push.dw_max},
            {"interval_min", c.push.interval_min},
            {"interval_max", c.push.interval_max}}},
          {"randomization",
           {{"mass_frac", c.randomization.mass_frac},
            {"damping_frac", c.randomization.damping_frac},
            {"randomize_delay", c.randomization.randomize_delay}}},
          {"command_kind", static_cast<int>(c.command_kind)},
          {"v_cmd_max", c.v_cmd_max},
          {"w_cmd_max", c.w_cmd_max},
          {"constant_v", c.constant_v},
          {"constant_w", c.constant_w}};
}

CollectConfig collect_cfg_from_json(const json& j) {
  CollectConfig c;
  c.rollouts = j.at("rollouts").get<std::size_t>();
  c.steps = j.at("steps").get<std::size_t>();
  c.sigma_a = j.at("sigma_a").get<double>();
  const auto& p = j.at("push");
  c.push.enabled = p.at("enabled").get<bool>();
  c.push.dv_max = p.at("dv_max").get<double>();
  c.push.dw_max = p.at("dw_max").get<double>();
  c.push.interval_min = p.at("interval_min").get<double>();
  c.push.interval_max = p.at("interval_max").get<double>();
  const auto& r = j.at("randomization");
  c.randomization.mass_frac = r.at("mass_frac").get<double>();
  c.randomization.damping_frac = r.at("damping_frac").get<double>();
  c.randomization.randomize_delay = r.at("randomize_delay").get<bool>();
  c.command_kind =
      static_cast<CommandProfileKind>(j.at("command_kind").get<int>());
  c.v_cmd_max = j.at("v_cmd_max").get<double>();
  c.w_cmd_max = j.at("w_cmd_max").get<double>();
  c.constant_v = j.at("constant_v").get<double>();
  c.constant_w = j.at("constant_w").get<double>();
  return c;
}

}  // namespace

void save_dataset(const RolloutDataset& ds, const std::string& path,
                  const std::string& config_hash) {
  const std::size_t cmd_w = ds.config.cmd_width();
  std::string blob;
  blob.append(kMagic, 5);
  put_u32(blob, static_cast<std::uint32_t>(ds.rollouts.size()));
  // per-rollout length table up front
  for (const auto& r : ds.rollouts) {
    put_u32(blob, static_cast<std::uint32_t>(r.length()));
  }
  for (const auto& r : ds.rollouts) {
    put_u64(blob, r.seed);
    blob.push_back(r.fell ? 1 : 0);
    const auto& p = r.params;
    for (double v : {p.dt, p.m, p.inertia, p.f_max, p.t_max, p.c_v, p.c_w,
                     p.c_theta, p.g, p.l, p.theta_fail,
                     double(p.action_delay)}) {
      put_f32(blob, v);
    }
    for (std::size_t t = 0; t < r.length(); ++t) {
      sim_state_put(blob, r.sim_states[t]);
      double st[kStateWidth];
      r.states[t].flatten(st);
      for (double v : st) put_f32(blob, v);
      // onboard channels, velocity included (restriction happens later)
      put_f32(blob, r.obs[t].yaw_rate);
      put_f32(blob, r.obs[t].joint_angle);
      put_f32(blob, r.obs[t].joint_rate);
      put_f32(blob, r.obs[t].grav_sin);
      put_f32(blob, r.obs[t].grav_cos);
      put_f32(blob, r.obs[t].base_speed);
      put_f32(blob, r.executed[t].drive);
      put_f32(blob, r.executed[t].steer);
      put_f32(blob, r.mean[t].drive);
      put_f32(blob, r.mean[t].steer);
      for (std::size_t c = 0; c < cmd_w; ++c) {
        put_f32(blob, r.commands[t].values[c]);
      }
      blob.push_back(static_cast<char>(r.push_flags[t]));
    }
  }
  {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  json manifest = {
      {"format", "SCDS1"},
      {"version", 1},
      {"widths",
       {{"sim", kSimWidth},
        {"state", kStateWidth},
        {"obs", kObsWidthV},
        {"action", kActionWidth},
        {"cmd", cmd_w}}},
      {"rollouts", ds.rollouts.size()},
      {"total_steps", ds.total_steps()},
      {"discarded", ds.discarded},
      {"seed", ds.seed},
      {"collect", collect_cfg_to_json(ds.config)},
      {"blob_hash", content_hash(blob)},
      {"config_hash", config_hash},
  };
  std::ofstream mf(path + ".manifest.json");
  mf << manifest.dump(2) << "\n";
}

RolloutDataset load_dataset(const std::string& path) {
  std::ifstream mf(path + ".manifest.json");
  if (!mf) throw std::runtime_error("missing manifest " + path + ".manifest.json");
  json manifest = json::parse(mf);
  if (manifest.at("format") != "SCDS1") {
    throw std::runtime_error("SCDS1: bad manifest format field");
  }
  const auto& w = manifest.at("widths");
  if (w.at("sim") != kSimWidth || w.at("state") != kStateWidth ||
      w.at("obs") != kObsWidthV || w.at("action") != kActionWidth) {
    throw std::runtime_error("SCDS1: schema width mismatch");
  }

  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string blob((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());

  RolloutDataset ds;
  ds.config = collect_cfg_from_json(manifest.at("collect"));
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.discarded = manifest.at("discarded").get<std::size_t>();
  const std::size_t cmd_w = ds.config.cmd_width();
  if (w.at("cmd").get<std::size_t>() != cmd_w) {
    throw std::runtime_error("SCDS1: command width mismatch");
  }

  Reader r{blob};
  r.need(5);
  if (std::memcmp(blob.data(), kMagic, 5) != 0) {
    throw std::runtime_error("SCDS1: bad magic");
  }
  r.pos = 5;
  const std::uint32_t n_rollouts = r.u32();
  if (n_rollouts != manifest.at("rollouts").get<std::uint32_t>()) {
    throw std::runtime_error("SCDS1: rollout count disagrees with manifest");
  }
  std::vector<std::uint32_t> lengths(n_rollouts);
  for (auto& l : lengths) l = r.u32();

  std::size_t total = 0;
  for (std::uint32_t i = 0; i < n_rollouts; ++i) {
    RolloutRecord rec;
    rec.seed = r.u64();
    r.need(1);
    rec.fell = blob[r.pos++] != 0;
    double pv[12];
    for (double& v : pv) v = r.f32();
    rec.params.dt = pv[0];
    rec.params.m = pv[1];
    rec.params.inertia = pv[2];
    rec.params.f_max = pv[3];
    rec.params.t_max = pv[4];
    rec.params.c_v = pv[5];
    rec.params.c_w = pv[6];
    rec.params.c_theta = pv[7];
    rec.params.g = pv[8];
    rec.params.l = pv[9];
    rec.params.theta_fail = pv[10];
    rec.params.action_delay = static_cast<std::size_t>(pv[11]);
    for (std::uint32_t t = 0; t < lengths[i]; ++t) {
      rec.sim_states.push_back(sim_state_get(r));
      double st[kStateWidth];
      for (double& v : st) v = r.f32();
      rec.states.push_back(PrivilegedState::from_flat(st));
      OnboardObservation o;
      o.yaw_rate = r.f32();
      o.joint_angle = r.f32();
      o.joint_rate = r.f32();
      o.grav_sin = r.f32();
      o.grav_cos = r.f32();
      o.has_base_speed = true;
      o.base_speed = r.f32();
      rec.obs.push_back(o);
      rec.executed.push_back({r.f32(), r.f32()});
      rec.mean.push_back({r.f32(), r.f32()});
      Command c;
      c.kind = cmd_w == 3 ? Command::Kind::motion_reference
                          : Command::Kind::velocity;
      for (std::size_t k = 0; k < cmd_w; ++k) c.values.push_back(r.f32());
      rec.commands.push_back(c);
      r.need(1);
      rec.push_flags.push_back(static_cast<std::uint8_t>(blob[r.pos++]));
    }
    total += rec.length();
    ds.rollouts.push_back(std::move(rec));
  }
  if (r.pos != blob.size()) {
    throw std::runtime_error("SCDS1: trailing bytes at offset " +
                             std::to_string(r.pos));
  }
  if (total != manifest.at("total_steps").get<std::size_t>()) {
    throw std::runtime_error("SCDS1: step count disagrees with manifest");
  }
  return ds;
}

}  // namespace scdp
