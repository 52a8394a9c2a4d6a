#pragma once

// Expert rollout collection with Gaussian action noise and scheduled pushes,
// plus the SCDS1 on-disk format (JSON manifest + little-endian float32 blob).

#include <cstdint>
#include <string>
#include <vector>

#include "scdp/core.hpp"
#include "scdp/sim.hpp"

namespace scdp {

struct RolloutRecord {
  // per-step arrays, equal length
  std::vector<sim::SimState> sim_states;   // full simulator state at t
  std::vector<PrivilegedState> states;     // privileged projection of t
  std::vector<OnboardObservation> obs;     // onboard projection (with v;
                                           // stripped at example build)
  std::vector<Action> executed;            // action applied to the sim at t
  std::vector<Action> mean;                // expert mean that produced it
  std::vector<Command> commands;           // c_t
  std::vector<std::uint8_t> push_flags;    // push applied before this step
  // episode metadata
  std::uint64_t seed = 0;
  sim::SimParams params;                   // randomized draw for this episode
  bool fell = false;

  std::size_t length() const { return sim_states.size(); }
};

enum class CommandProfileKind { constant, piecewise, reference_tracking };

struct CollectConfig {
  std::size_t rollouts = 2000;
  std::size_t steps = 300;
  double sigma_a = 0.12;               // action noise std
  sim::PushConfig push;
  sim::RandomizationConfig randomization;
  CommandProfileKind command_kind = CommandProfileKind::piecewise;
  double v_cmd_max = 1.0;
  double w_cmd_max = 2.0;
  double constant_v = 0.5;
  double constant_w = 0.0;

  std::size_t cmd_width() const {
    return command_kind == CommandProfileKind::reference_tracking ? 3 : 2;
  }
};

struct RolloutDataset {
  CollectConfig config;
  std::uint64_t seed = 0;
  std::vector<RolloutRecord> rollouts;
  std::size_t discarded = 0;  // diverged rollouts dropped during collection

  std::size_t total_steps() const {
    std::size_t n = 0;
    for (const auto& r : rollouts) n += r.length();
    return n;
  }
};

// Per-step velocity command stream, bounded by the configured ranges.
// Piecewise profiles resample every 2-4 s.
std::vector<Command> command_profile(CommandProfileKind kind,
                                     const CollectConfig& cfg,
                                     std::size_t steps, double dt, Rng& rng);

RolloutDataset collect(const CollectConfig& cfg, std::uint64_t seed);

// SCDS1 serialization: writes <path> (binary blob, magic "SCDS1") and
// <path>.manifest.json. load() validates magic, widths, and counts and
// reports the byte offset on truncation.
void save_dataset(const RolloutDataset& ds, const std::string& path,
                  const std::string& config_hash = "");
RolloutDataset load_dataset(const std::string& path);

}  // namespace scdp
