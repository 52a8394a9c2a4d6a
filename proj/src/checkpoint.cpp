#include "scdp/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "scdp/hashio.hpp"

namespace scdp {
namespace {

using nlohmann::json;

json schedule_to_json(const ScheduleConfig& s) {
  return {{"steps", s.steps},
          {"beta_start", s.beta_start},
          {"beta_end", s.beta_end},
          {"posterior_variance", s.posterior_variance}};
}

ScheduleConfig schedule_from_json(const json& j) {
  ScheduleConfig s;
  s.steps = j.at("steps").get<std::size_t>();
  s.beta_start = j.at("beta_start").get<double>();
  s.beta_end = j.at("beta_end").get<double>();
  s.posterior_variance = j.at("posterior_variance").get<bool>();
  return s;
}

json model_cfg_to_json(const DenoiserConfig& c) {
  return {{"layers", c.layers},
          {"heads", c.heads},
          {"d_model", c.d_model},
          {"d_ff", c.d_ff},
          {"context_len", c.context_len},
          {"horizon", c.horizon},
          {"diffusion_steps", c.diffusion_steps},
          {"obs_width", c.obs_width},
          {"action_width", c.action_width},
          {"state_in_width", c.state_in_width},
          {"state_out_width", c.state_out_width},
          {"cmd_width", c.cmd_width},
          {"priv_width", c.priv_width},
          {"full_prefix_attention", c.full_prefix_attention},
          {"condition_context_tokens", c.condition_context_tokens},
          {"repr_align", c.repr_align}};
}

DenoiserConfig model_cfg_from_json(const json& j) {
  DenoiserConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.context_len = j.at("context_len").get<std::size_t>();
  c.horizon = j.at("horizon").get<std::size_t>();
  c.diffusion_steps = j.at("diffusion_steps").get<std::size_t>();
  c.obs_width = j.at("obs_width").get<std::size_t>();
  c.action_width = j.at("action_width").get<std::size_t>();
  c.state_in_width = j.at("state_in_width").get<std::size_t>();
  c.state_out_width = j.at("state_out_width").get<std::size_t>();
  c.cmd_width = j.at("cmd_width").get<std::size_t>();
  c.priv_width = j.at("priv_width").get<std::size_t>();
  c.full_prefix_attention = j.at("full_prefix_attention").get<bool>();
  c.condition_context_tokens = j.at("condition_context_tokens").get<bool>();
  c.repr_align = j.at("repr_align").get<bool>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& dir, const Denoiser& model,
                     const ScheduleConfig& state_sched,
                     const ScheduleConfig& action_sched,
                     const std::string& config_hash,
                     const std::string& dataset_hash) {
  std::filesystem::create_directories(dir);
  const auto& store = model.params();

  {
    std::ofstream blob(dir + "/params.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("cannot write " + dir + "/params.bin");
    write_f32_le(blob, store.values());
  }

  json table = json::array();
  for (const auto& [name, ref] : store.names()) {
    table.push_back({{"name", name},
                     {"offset", ref.offset},
                     {"rows", ref.rows},
                     {"cols", ref.cols}});
  }
  json manifest = {
      {"format", "scdp-checkpoint-v1"},
      {"model", model_cfg_to_json(model.config())},
      {"state_schedule", schedule_to_json(state_sched)},
      {"action_schedule", schedule_to_json(action_sched)},
      {"param_count", store.size()},
      {"params", table},
      {"config_hash", config_hash},
      {"dataset_hash", dataset_hash},
      {"params_hash", file_hash(dir + "/params.bin")},
  };
  std::ofstream mf(dir + "/manifest.json");
  mf << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream mf(dir + "/manifest.json");
  if (!mf) throw std::runtime_error("missing checkpoint manifest in " + dir);
  json manifest = json::parse(mf);
  if (manifest.at("format") != "scdp-checkpoint-v1") {
    throw std::runtime_error("unknown checkpoint format");
  }
  Checkpoint ck;
  ck.model_cfg = model_cfg_from_json(manifest.at("model"));
  ck.state_schedule = schedule_from_json(manifest.at("state_schedule"));
  ck.action_schedule = schedule_from_json(manifest.at("action_schedule"));
  ck.config_hash = manifest.value("config_hash", "");
  ck.dataset_hash = manifest.value("dataset_hash", "");
  ck.model = std::make_unique<Denoiser>(ck.model_cfg);

  auto& store = ck.model->params();
  const std::size_t n = manifest.at("param_count").get<std::size_t>();
  if (n != store.size()) {
    throw std::runtime_error("checkpoint param count does not match config");
  }
  for (const auto& e : manifest.at("params")) {
    const auto it = store.names().find(e.at("name").get<std::string>());
    if (it == store.names().end() ||
        it->second.offset != e.at("offset").get<std::size_t>() ||
        it->second.rows != e.at("rows").get<std::size_t>() ||
        it->second.cols != e.at("cols").get<std::size_t>()) {
      throw std::runtime_error("checkpoint param table mismatch");
    }
  }
  std::ifstream blob(dir + "/params.bin", std::ios::binary);
  if (!blob) throw std::runtime_error("missing params.bin in " + dir);
  store.values() = read_f32_le(blob, n);
  return ck;
}

}  // namespace scdp
