#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "scdp/datagen.hpp"

using namespace scdp;

namespace {

CollectConfig small_config() {
  CollectConfig cfg;
  cfg.rollouts = 12;
  cfg.steps = 160;
  return cfg;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("piecewise command profile: bounds, segment lengths, coverage") {
  CollectConfig cfg;
  Rng rng(41);
  const double dt = 0.02;
  const auto cmds = command_profile(CommandProfileKind::piecewise, cfg, 3000,
                                    dt, rng);
  REQUIRE(cmds.size() == 3000);
  double prev_v = cmds[0].values[0];
  std::size_t seg_start = 0;
  bool pos_v = false, neg_v = false;
  for (std::size_t t = 0; t < cmds.size(); ++t) {
    REQUIRE(cmds[t].kind == Command::Kind::velocity);
    CHECK(std::abs(cmds[t].values[0]) <= cfg.v_cmd_max + 1e-12);
    CHECK(std::abs(cmds[t].values[1]) <= cfg.w_cmd_max + 1e-12);
    pos_v = pos_v || cmds[t].values[0] > 0.2;
    neg_v = neg_v || cmds[t].values[0] < -0.2;
    if (cmds[t].values[0] != prev_v) {
      const double seg_s = (t - seg_start) * dt;
      CHECK(seg_s >= 2.0 - 1e-9);
      CHECK(seg_s <= 4.0 + 1e-9);
      seg_start = t;
      prev_v = cmds[t].values[0];
    }
  }
  CHECK(pos_v);
  CHECK(neg_v);
}

TEST_CASE("collect produces internally consistent rollouts") {
  const CollectConfig cfg = small_config();
  const RolloutDataset ds = collect(cfg, 5);
  REQUIRE(ds.rollouts.size() + ds.discarded == cfg.rollouts);
  for (const auto& r : ds.rollouts) {
    const std::size_t n = r.length();
    REQUIRE(n > 0);
    CHECK(r.states.size() == n);
    CHECK(r.obs.size() == n);
    CHECK(r.executed.size() == n);
    CHECK(r.mean.size() == n);
    CHECK(r.commands.size() == n);
    CHECK(r.push_flags.size() == n);
    for (const auto& o : r.obs) CHECK(o.has_base_speed);
    for (const auto& a : r.executed) {
      CHECK(std::abs(a.drive) <= 1.0);
      CHECK(std::abs(a.steer) <= 1.0);
    }
    if (!r.fell) CHECK(n == cfg.steps);
  }
}

TEST_CASE("recorded transitions replay through the dynamics") {
  const CollectConfig cfg = small_config();
  const RolloutDataset ds = collect(cfg, 6);
  std::size_t checked = 0;
  for (const auto& r : ds.rollouts) {
    for (std::size_t t = 0; t + 1 < r.length(); ++t) {
      if (r.push_flags[t + 1]) continue;  // impulse applied between records
      const sim::SimState next = sim::step(r.sim_states[t], r.executed[t],
                                           r.params);
      CHECK(std::abs(next.x - r.sim_states[t + 1].x) < 1e-6);
      CHECK(std::abs(next.v - r.sim_states[t + 1].v) < 1e-6);
      CHECK(std::abs(next.theta - r.sim_states[t + 1].theta) < 1e-6);
      CHECK(std::abs(next.psi - r.sim_states[t + 1].psi) < 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("action noise magnitude recovers sigma_a") {
  CollectConfig cfg;
  cfg.rollouts = 60;
  cfg.steps = 200;
  cfg.randomization.randomize_delay = false;  // keeps mean/executed paired
  const RolloutDataset ds = collect(cfg, 7);
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& r : ds.rollouts) {
    for (std::size_t t = 0; t < r.length(); ++t) {
      // skip steps where clipping bit: residual is censored there
      if (std::abs(r.executed[t].drive) > 0.999 ||
          std::abs(r.executed[t].steer) > 0.999) {
        continue;
      }
      const double d0 = r.executed[t].drive - r.mean[t].drive;
      const double d1 = r.executed[t].steer - r.mean[t].steer;
      sq += d0 * d0 + d1 * d1;
      n += 2;
    }
  }
  REQUIRE(n > 2000);
  const double sigma_hat = std::sqrt(sq / n);
  CHECK(sigma_hat == doctest::Approx(cfg.sigma_a).epsilon(0.05));
}

TEST_CASE("reference-tracking commands describe the nominal replay") {
  CollectConfig cfg = small_config();
  cfg.command_kind = CommandProfileKind::reference_tracking;
  const RolloutDataset ds = collect(cfg, 8);
  REQUIRE_FALSE(ds.rollouts.empty());
  for (const auto& r : ds.rollouts) {
    for (const auto& c : r.commands) {
      REQUIRE(c.kind == Command::Kind::motion_reference);
      REQUIRE(c.width() == 3);
      CHECK(std::abs(c.values[0]) < 1.0);           // reference joint angle
      CHECK(std::abs(c.values[2]) <= 3.1416);       // wrapped heading delta
    }
  }
}

TEST_CASE("dataset round-trips through the on-disk format") {
  const CollectConfig cfg = small_config();
  const RolloutDataset ds = collect(cfg, 9);
  const std::string path = temp_path("scdp_ds_roundtrip.bin");
  save_dataset(ds, path, "cfghash");
  const RolloutDataset back = load_dataset(path);
  REQUIRE(back.rollouts.size() == ds.rollouts.size());
  CHECK(back.seed == ds.seed);
  CHECK(back.discarded == ds.discarded);
  for (std::size_t i = 0; i < ds.rollouts.size(); ++i) {
    const auto& a = ds.rollouts[i];
    const auto& b = back.rollouts[i];
    REQUIRE(a.length() == b.length());
    CHECK(a.seed == b.seed);
    CHECK(a.fell == b.fell);
    CHECK(b.params.m == static_cast<float>(a.params.m));
    for (std::size_t t = 0; t < a.length(); ++t) {
      CHECK(b.sim_states[t].x == static_cast<float>(a.sim_states[t].x));
      CHECK(b.executed[t].drive == static_cast<float>(a.executed[t].drive));
      CHECK(b.commands[t].values[0] ==
            static_cast<float>(a.commands[t].values[0]));
      CHECK(b.push_flags[t] == a.push_flags[t]);
      CHECK(b.obs[t].base_speed == static_cast<float>(a.obs[t].base_speed));
    }
  }
  std::remove(path.c_str());
  std::remove((path + ".manifest.json").c_str());
}

TEST_CASE("corrupted magic and truncation are rejected with context") {
  CollectConfig cfg = small_config();
  cfg.rollouts = 3;
  const RolloutDataset ds = collect(cfg, 10);
  const std::string path = temp_path("scdp_ds_corrupt.bin");
  save_dataset(ds, path, "");

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXXX", 5);
  }
  CHECK_THROWS_WITH_AS(load_dataset(path),
                       doctest::Contains("magic"), std::runtime_error);

  save_dataset(ds, path, "");
  {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    std::filesystem::resize_file(path, size - 16);
  }
  CHECK_THROWS_WITH_AS(load_dataset(path),
                       doctest::Contains("byte offset"), std::runtime_error);
  std::remove(path.c_str());
  std::remove((path + ".manifest.json").c_str());
}

TEST_CASE("collection is deterministic in the seed") {
  const CollectConfig cfg = small_config();
  const RolloutDataset a = collect(cfg, 11);
  const RolloutDataset b = collect(cfg, 11);
  REQUIRE(a.rollouts.size() == b.rollouts.size());
  for (std::size_t i = 0; i < a.rollouts.size(); ++i) {
    REQUIRE(a.rollouts[i].length() == b.rollouts[i].length());
    for (std::size_t t = 0; t < a.rollouts[i].length(); ++t) {
      CHECK(a.rollouts[i].sim_states[t].x == b.rollouts[i].sim_states[t].x);
      CHECK(a.rollouts[i].executed[t].drive ==
            b.rollouts[i].executed[t].drive);
    }
  }
  const RolloutDataset c = collect(cfg, 12);
  bool differs = c.rollouts.size() != a.rollouts.size();
  if (!differs) {
    differs = c.rollouts[0].sim_states.back().x !=
              a.rollouts[0].sim_states.back().x;
  }
  CHECK(differs);
}
