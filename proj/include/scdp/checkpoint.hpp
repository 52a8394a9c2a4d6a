#pragma once

// Checkpoint format: <dir>/manifest.json carries the denoiser config, both
// schedule configs, provenance hashes, and a named-offset table into
// <dir>/params.bin, a flat little-endian float32 blob.

#include <memory>
#include <string>

#include "scdp/denoiser.hpp"
#include "scdp/schedule.hpp"

namespace scdp {

struct Checkpoint {
  DenoiserConfig model_cfg;
  ScheduleConfig state_schedule;
  ScheduleConfig action_schedule;
  std::string config_hash;   // hash of the producing config document
  std::string dataset_hash;  // hash of the training dataset blob
  std::unique_ptr<Denoiser> model;
};

void save_checkpoint(const std::string& dir, const Denoiser& model,
                     const ScheduleConfig& state_sched,
                     const ScheduleConfig& action_sched,
                     const std::string& config_hash,
                     const std::string& dataset_hash);

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace scdp
