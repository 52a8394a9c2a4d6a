// scdp command line: collect rollouts, train a policy, evaluate it, sweep
// ablation cells, and render report artifacts. One JSON config file drives
// every stage; artifacts embed the config hash so `report` can refuse
// mixed-provenance inputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "scdp/checkpoint.hpp"
#include "scdp/config.hpp"
#include "scdp/datagen.hpp"
#include "scdp/eval.hpp"
#include "scdp/hashio.hpp"
#include "scdp/policy.hpp"
#include "scdp/report.hpp"
#include "scdp/training.hpp"

namespace {

using nlohmann::json;

int parse_threads_env() {
  // All pipelines here are single-threaded; the env var is an upper bound,
  // so any positive value is accepted.
  const char* env = std::getenv("SCDP_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  if (n <= 0) {
    throw std::runtime_error("SCDP_THREADS must be a positive integer");
  }
  return n;
}

std::string dataset_blob_hash(const std::string& dataset_path) {
  std::ifstream mf(dataset_path + ".manifest.json");
  if (!mf) {
    throw std::runtime_error("missing dataset manifest for " + dataset_path);
  }
  return json::parse(mf).at("blob_hash").get<std::string>();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_collect(const std::string& config_path, const std::string& out_path,
                std::uint64_t seed) {
  const scdp::RunConfig cfg = scdp::load_config_file(config_path);
  scdp::RolloutDataset ds = scdp::collect(cfg.datagen, seed);
  scdp::save_dataset(ds, out_path, scdp::config_hash(cfg));
  std::cout << "collected " << ds.rollouts.size() << " rollouts ("
            << ds.total_steps() << " steps, " << ds.discarded
            << " discarded) -> " << out_path << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& dataset_path,
              const std::string& out_dir) {
  const scdp::RunConfig cfg = scdp::load_config_file(config_path);
  const scdp::RolloutDataset ds = scdp::load_dataset(dataset_path);
  const auto sampler = scdp::dataset_sampler(ds, cfg.train.pipe);
  scdp::TrainResult result = scdp::train_model(sampler, cfg.train);

  std::filesystem::create_directories(out_dir);
  const scdp::ScheduleConfig action_sched =
      cfg.train.action_schedule.value_or(cfg.train.schedule);
  scdp::save_checkpoint(out_dir, *result.model, cfg.train.schedule,
                        action_sched, scdp::config_hash(cfg),
                        dataset_blob_hash(dataset_path));

  json log = json::array();
  for (const auto& r : result.log) {
    log.push_back({{"step", r.step},
                   {"loss", r.loss},
                   {"ddpm_res", r.ddpm_res},
                   {"cmd", r.cmd},
                   {"repr", r.repr},
                   {"lr", r.lr}});
  }
  write_text(out_dir + "/train_log.json", log.dump(2) + "\n");
  write_text(out_dir + "/loss.svg", scdp::render_loss_svg(result.log));
  std::cout << "trained " << cfg.train.updates << " updates -> " << out_dir
            << "\n";
  return 0;
}

json task_to_json(const scdp::TaskResult& r) {
  json trials = json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"seed", t.seed},
                      {"success", t.success},
                      {"score", t.score},
                      {"steps", t.steps},
                      {"error", t.error}});
  }
  return {{"task", r.task},
          {"success_rate", r.success_rate},
          {"mean_score", r.mean_score},
          {"seed", r.seed},
          {"trials", trials}};
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_dir,
             const std::string& task, const std::string& agent_kind,
             const std::string& out_path) {
  const scdp::RunConfig cfg = scdp::load_config_file(config_path);

  scdp::ExpertAgent expert;
  std::unique_ptr<scdp::Checkpoint> ckpt;
  std::unique_ptr<scdp::DualSchedule> schedules;
  std::unique_ptr<scdp::DiffusionController> ctrl;
  std::unique_ptr<scdp::SensorAgent> sensor;
  scdp::Agent* agent = &expert;
  std::string ckpt_config_hash;
  if (agent_kind == "policy") {
    if (ckpt_dir.empty()) {
      throw std::runtime_error("--checkpoint is required for --agent policy");
    }
    ckpt = std::make_unique<scdp::Checkpoint>(scdp::load_checkpoint(ckpt_dir));
    ckpt_config_hash = ckpt->config_hash;
    schedules = std::make_unique<scdp::DualSchedule>(ckpt->state_schedule,
                                                     ckpt->action_schedule);
    ctrl = std::make_unique<scdp::DiffusionController>(*ckpt->model,
                                                       *schedules,
                                                       cfg.eval.seed);
    const bool with_v = ckpt->model_cfg.obs_width == scdp::kObsWidthV;
    sensor = std::make_unique<scdp::SensorAgent>(*ctrl, with_v);
    agent = sensor.get();
  } else if (agent_kind != "expert") {
    throw std::runtime_error("--agent must be 'expert' or 'policy'");
  }

  json out;
  if (task == "perturbation") {
    out = task_to_json(scdp::run_perturbation(*agent, cfg.eval));
  } else if (task == "joystick") {
    out = task_to_json(scdp::run_joystick(*agent, cfg.eval));
  } else if (task == "waypoints") {
    out = task_to_json(scdp::run_waypoints(*agent, cfg.eval));
  } else if (task == "tracking") {
    const scdp::TrackingResult r =
        scdp::run_reference_tracking(*agent, cfg.eval);
    out = task_to_json(r.task);
    out["mpjpe_local"] = r.mpjpe_local;
    out["mpjpe_global"] = r.mpjpe_global;
    out["vel_dist"] = r.vel_dist;
    out["accel_dist"] = r.accel_dist;
  } else {
    throw std::runtime_error("unknown task '" + task + "'");
  }
  out["config_hash"] = scdp::config_hash(cfg);
  out["checkpoint_config_hash"] = ckpt_config_hash;
  out["agent"] = agent_kind;
  write_text(out_path, out.dump(2) + "\n");
  std::cout << task << " success rate " << out["success_rate"] << " -> "
            << out_path << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& dataset_path,
               const std::string& out_path) {
  const scdp::RunConfig cfg = scdp::load_config_file(config_path);
  const scdp::RolloutDataset ds = scdp::load_dataset(dataset_path);

  std::vector<scdp::AblationCell> cells;
  for (bool mixed : {true, false}) {
    for (bool align : {true, false}) {
      scdp::AblationCell c;
      c.mixed_obs = mixed;
      c.ctx_align = align;
      c.context_len = static_cast<int>(cfg.train.pipe.context_len);
      c.sigma_a = cfg.datagen.sigma_a;
      c.push_magnitude = cfg.eval.push.dv_max;
      c.name = std::string(mixed ? "mixed" : "co") + "/" +
               (align ? "aligned" : "mean-ctx");
      cells.push_back(c);
    }
  }

  const auto run_cell = [&](const scdp::AblationCell& cell) {
    scdp::TrainConfig tc = cfg.train;
    tc.pipe.mixed_obs = cell.mixed_obs;
    tc.pipe.restricted = cell.restricted;
    tc.pipe.ctx_align = cell.ctx_align;
    tc.pipe.full_prefix_attention = cell.full_prefix_attention;
    tc.pipe.context_len = static_cast<std::size_t>(cell.context_len);
    const auto sampler = scdp::dataset_sampler(ds, tc.pipe);
    scdp::TrainResult tr = scdp::train_model(sampler, tc);
    const scdp::DualSchedule schedules(
        tc.schedule, tc.action_schedule.value_or(tc.schedule));
    scdp::DiffusionController ctrl(*tr.model, schedules, cfg.eval.seed);
    scdp::SensorAgent agent(ctrl, tc.pipe.velocity_feedback);
    scdp::EvalConfig ec = cfg.eval;
    ec.push.dv_max = cell.push_magnitude;
    ec.push.dw_max = cell.push_magnitude;
    return scdp::run_perturbation(agent, ec).success_rate;
  };

  const auto rows = scdp::run_ablation_matrix(cells, run_cell);
  write_text(out_path, scdp::render_ablation_markdown(rows));
  std::cout << rows.size() << " cells -> " << out_path << "\n";
  return 0;
}

int cmd_report(const std::string& config_path, const std::string& ckpt_dir,
               const std::string& results_path, const std::string& out_dir) {
  const scdp::RunConfig cfg = scdp::load_config_file(config_path);
  const std::string expect = scdp::config_hash(cfg);

  const scdp::Checkpoint ckpt = scdp::load_checkpoint(ckpt_dir);
  if (ckpt.config_hash != expect) {
    throw std::runtime_error("checkpoint config hash " + ckpt.config_hash +
                             " does not match config " + expect);
  }
  std::ifstream rf(results_path);
  if (!rf) throw std::runtime_error("cannot open " + results_path);
  const json results = json::parse(rf);
  if (results.at("config_hash").get<std::string>() != expect) {
    throw std::runtime_error("results config hash mismatch: " +
                             results.at("config_hash").get<std::string>() +
                             " vs " + expect);
  }

  std::filesystem::create_directories(out_dir);
  std::ostringstream md;
  md << "# run report\n\n";
  md << "- config hash: `" << expect << "`\n";
  md << "- dataset hash: `" << ckpt.dataset_hash << "`\n";
  md << "- task: " << results.at("task").get<std::string>() << "\n";
  md << "- success rate: " << results.at("success_rate").get<double>()
     << "\n";
  md << "- mean score: " << results.at("mean_score").get<double>() << "\n";
  write_text(out_dir + "/report.md", md.str());

  std::ifstream lf(ckpt_dir + "/train_log.json");
  if (lf) {
    std::vector<scdp::TrainLogRecord> log;
    for (const auto& r : json::parse(lf)) {
      log.push_back({r.at("step").get<std::size_t>(),
                     r.at("loss").get<double>(),
                     r.at("ddpm_res").get<double>(), r.at("cmd").get<double>(),
                     r.at("repr").get<double>(), r.at("lr").get<double>()});
    }
    write_text(out_dir + "/loss.svg", scdp::render_loss_svg(log));
  }
  std::cout << "report -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sensor-conditioned diffusion policy pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_path, dataset_path, ckpt_dir, results_path;
  std::string task = "perturbation";
  std::string agent = "policy";
  std::uint64_t seed = 0;

  auto* collect = app.add_subcommand("collect", "collect expert rollouts");
  collect->add_option("--config", config_path)->required()
      ->check(CLI::ExistingFile);
  collect->add_option("--out", out_path)->required();
  collect->add_option("--seed", seed);

  auto* train = app.add_subcommand("train", "train the diffusion policy");
  train->add_option("--config", config_path)->required()
      ->check(CLI::ExistingFile);
  train->add_option("--dataset", dataset_path)->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", out_path)->required();

  auto* eval = app.add_subcommand("eval", "run a closed-loop task");
  eval->add_option("--config", config_path)->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", ckpt_dir);
  eval->add_option("--task", task)
      ->check(CLI::IsMember({"perturbation", "joystick", "waypoints",
                             "tracking"}));
  eval->add_option("--agent", agent)->check(CLI::IsMember({"expert",
                                                           "policy"}));
  eval->add_option("--out", out_path)->required();

  auto* ablate = app.add_subcommand("ablate", "train+eval an ablation sweep");
  ablate->add_option("--config", config_path)->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--dataset", dataset_path)->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--out", out_path)->required();

  auto* report = app.add_subcommand("report", "render report artifacts");
  report->add_option("--config", config_path)->required()
      ->check(CLI::ExistingFile);
  report->add_option("--checkpoint", ckpt_dir)->required();
  report->add_option("--results", results_path)->required()
      ->check(CLI::ExistingFile);
  report->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    parse_threads_env();
    if (collect->parsed()) return cmd_collect(config_path, out_path, seed);
    if (train->parsed()) return cmd_train(config_path, dataset_path, out_path);
    if (eval->parsed()) {
      return cmd_eval(config_path, ckpt_dir, task, agent, out_path);
    }
    if (ablate->parsed()) {
      return cmd_ablate(config_path, dataset_path, out_path);
    }
    if (report->parsed()) {
      return cmd_report(config_path, ckpt_dir, results_path, out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
