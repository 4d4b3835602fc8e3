#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "piekd/adam.hpp"
#include "piekd/env.hpp"
#include "piekd/policy.hpp"
#include "piekd/replay.hpp"

namespace piekd {

// Soft Q-function with its slow target copy. The target only moves through
// Polyak averaging or distillation-phase synchronization, never by gradient.
struct Critic {
  Mlp net;     // [state_dim + action_dim, hidden..., 1]
  Mlp target;
};

// Learned entropy temperature, exponentially parameterized so alpha > 0.
struct Temperature {
  Tensor log_alpha = Tensor::scalar(0.0);
  double target_entropy = 0.0;
  double alpha() const;
};

struct SacConfig {
  double learning_rate = 3e-4;
  std::int64_t batch_size = 128;
  double discount = 0.99;
  double polyak = 0.005;  // target <- (1-rho)*target + rho*online
  double init_alpha = 1.0;
  std::vector<std::int64_t> hidden = {64, 64};
};

// One ensemble member's learner: policy, twin critics with targets, learned
// temperature, and one Adam state per network.
struct SacAgent {
  SquashedGaussianPolicy policy;
  std::array<Critic, 2> critics;
  Temperature temperature;
  AdamState policy_opt;
  std::array<AdamState, 2> critic_opt;
  AdamState temp_opt;

  static SacAgent make(const MdpSpec& spec, const SacConfig& cfg,
                       std::uint64_t seed);
};

// One Adam step on both critics toward
//   y = r + gamma * (1-done) * (min_i targetQ_i(s', a') - alpha * log pi(a'|s'))
// with a' resampled from the current policy. Returns the loss, the MSE
// averaged over the twin critics. Target nets are untouched here.
double update_critic(SacAgent& agent, const Batch& batch, double gamma,
                     double alpha, Rng& rng);

// One Adam step on the policy minimizing
//   E_s[ alpha * log pi(a~|s) - min_i Q_i(s, a~) ],  a~ reparameterized.
// Critic parameters receive no update. Sampled log-probs are written to
// *log_probs_out for the temperature step.
double update_policy(SacAgent& agent, const Batch& batch, double alpha,
                     Rng& rng, Tensor* log_probs_out);

// One Adam step on log(alpha) minimizing E[-alpha * (log pi + target_entropy)];
// returns the new alpha.
double update_temperature(SacAgent& agent, const Tensor& log_probs);

// target <- (1 - rho) * target + rho * online, elementwise.
void polyak_update(Critic& critic, double rho);

struct StepLosses {
  double critic = 0.0;
  double policy = 0.0;
  double alpha = 0.0;
};

// One "policy update" in the accounting sense: update_critic, update_policy,
// update_temperature, then polyak on both critics.
StepLosses update_step(SacAgent& agent, const Batch& batch,
                       const SacConfig& cfg, Rng& rng);

// Convenience actor for rollouts.
ActionFn make_actor(const SquashedGaussianPolicy& policy, Rng* rng,
                    bool deterministic);

}  // namespace piekd
