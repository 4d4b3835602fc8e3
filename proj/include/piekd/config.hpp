#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "piekd/distill.hpp"
#include "piekd/env.hpp"
#include "piekd/sac.hpp"

namespace piekd {

// Every knob of a run. Arms set the operational fields they own unless the
// config file pins them explicitly:
//   vanilla              members=1, mode none
//   ensemble             members=K, mode none
//   piekd                members=K, mode distill, rule best
//   piekd-hardcopy       members=K, mode hardcopy, rule best
//   piekd-random-teacher members=K, mode distill, rule random
//   vanilla-extra        members=1, mode none, (K-1)*steps extra SAC updates
//                        per phase window (matched to piekd's accounting)
//   ensemble-extra       members=K, mode none, same extra updates
struct TrainerConfig {
  std::string arm = "piekd";
  std::string env_id = "pendulum";
  std::uint64_t seed = 0;
  long total_timesteps = 60000;
  int ensemble_size = 3;        // K; reference size for extra-update matching
  long distill_interval = 2000; // I, in env timesteps
  int return_window = 10;       // M
  std::size_t buffer_capacity = 1000000;
  SacConfig sac;
  DistillConfig distill;
  long eval_interval = 2000;    // must be a multiple of the env's T
  int eval_episodes = 10;
  int threads = 0;              // 0 = library default
  bool dump_buffer = false;

  // resolved by apply_arm
  int members = 3;
  long extra_updates_per_phase = 0;

  // which arm-owned fields the config file pinned explicitly
  struct {
    bool mode = false;
    bool rule = false;
  } pinned;

  static const std::vector<std::string>& arm_names();

  // Strict parse: unknown keys are an error. CLI-style overrides are applied
  // by the caller before apply_arm.
  static TrainerConfig from_json_file(const std::filesystem::path& path);
  static TrainerConfig from_json_text(const std::string& text);

  // Fills members / distill mode / extra updates from the arm name, keeping
  // any value the config file pinned explicitly.
  void apply_arm();

  // Structural checks that do not need the env.
  void validate() const;
  // Checks against the environment's episode length.
  void validate_for(const MdpSpec& spec) const;

  std::string to_json_text(bool include_arm) const;
};

}  // namespace piekd
