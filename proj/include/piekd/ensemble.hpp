#pragma once

#include <vector>

#include "piekd/config.hpp"
#include "piekd/distill.hpp"
#include "piekd/env.hpp"
#include "piekd/member.hpp"
#include "piekd/replay.hpp"

namespace piekd {

// K members, the shared buffer, and the distillation trigger counter.
// t_acc accumulates env timesteps and resets whenever it reaches the
// distillation interval.
struct EnsembleState {
  std::vector<Member> members;
  ReplayBuffer buffer;
  long t_acc = 0;
  long total_steps = 0;
  long episodes = 0;
  long rl_update_steps = 0;       // SAC update steps, rounds + extra phases
  long distill_update_steps = 0;  // distillation gradient steps
  long extra_cursor = 0;          // round-robin start for extra-update phases
};

// Members get independently derived seeds; buffer starts empty, windows
// empty, t_acc zero.
EnsembleState init_ensemble(const TrainerConfig& cfg, const MdpSpec& spec);

// Uniform over [0, K). K=1 consumes no randomness.
int select_policy(int ensemble_size, Rng& rng);

// Push one episodic return into the member's window.
void update_stat(Member& member, double episodic_return);

struct RoundReport {
  int actor = -1;
  double episodic_return = 0.0;
  std::vector<double> critic_loss;  // per member, averaged over the round
  std::vector<double> policy_loss;
  std::vector<double> alpha;
};

// One joint-training round: select an acting member, roll one stochastic
// episode, append it, then run T update steps for every member (fresh
// uniform batch per member and step; batch indices are drawn serially before
// the members update in parallel). Bumps t_acc by T.
RoundReport joint_training_round(EnsembleState& st, Env& env, Rng& rng,
                                 const TrainerConfig& cfg);

// Fires when t_acc >= I: runs the distillation phase (or the update-matched
// extra SAC steps for the *-extra arms), then resets t_acc. Returns whether
// a distillation phase actually ran; *report is filled whenever any phase
// activity happened.
bool maybe_distill(EnsembleState& st, const TrainerConfig& cfg, Rng& rng,
                   PhaseReport* report);

}  // namespace piekd
