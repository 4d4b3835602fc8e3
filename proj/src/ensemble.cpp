#include "piekd/ensemble.hpp"

#include <algorithm>

#include "piekd/par.hpp"

namespace piekd {

namespace {
// seed stream layout per member: params at 100+k, update noise at 200+k
constexpr std::uint64_t kMemberParamStream = 100;
constexpr std::uint64_t kMemberNoiseStream = 200;
}  // namespace

EnsembleState init_ensemble(const TrainerConfig& cfg, const MdpSpec& spec) {
  cfg.validate();
  EnsembleState st{.members = {},
                   .buffer = ReplayBuffer(spec.state_dim, spec.action_dim,
                                          cfg.buffer_capacity)};
  for (int k = 0; k < cfg.members; ++k) {
    Member m;
    m.index = k;
    m.agent = SacAgent::make(
        spec, cfg.sac,
        derive_seed(cfg.seed, kMemberParamStream + static_cast<unsigned>(k)));
    m.window = ReturnWindow(cfg.return_window);
    m.update_rng = Rng(
        derive_seed(cfg.seed, kMemberNoiseStream + static_cast<unsigned>(k)));
    st.members.push_back(std::move(m));
  }
  return st;
}

int select_policy(int ensemble_size, Rng& rng) {
  check(ensemble_size >= 1, "select_policy: ensemble_size must be >= 1");
  return static_cast<int>(
      rng.uniform_index(static_cast<std::uint64_t>(ensemble_size)));
}

void update_stat(Member& member, double episodic_return) {
  member.window.push(episodic_return);
}

RoundReport joint_training_round(EnsembleState& st, Env& env, Rng& rng,
                                 const TrainerConfig& cfg) {
  const int K = static_cast<int>(st.members.size());
  const int T = env.spec().episode_length;
  const auto batch = static_cast<std::size_t>(cfg.sac.batch_size);

  const int ke = select_policy(K, rng);
  Trajectory traj = rollout(
      env, make_actor(st.members[static_cast<std::size_t>(ke)].agent.policy,
                      &rng, /*deterministic=*/false),
      rng);
  st.buffer.append(traj, ke);

  // Batch indices for all T*K update steps, drawn serially so the member
  // loop can run in parallel against the read-only buffer.
  std::vector<std::vector<std::size_t>> indices(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    indices[static_cast<std::size_t>(k)] =
        st.buffer.sample_indices(static_cast<std::size_t>(T) * batch, rng);

  RoundReport rep;
  rep.actor = ke;
  rep.episodic_return = traj.episodic_return;
  rep.critic_loss.assign(static_cast<std::size_t>(K), 0.0);
  rep.policy_loss.assign(static_cast<std::size_t>(K), 0.0);
  rep.alpha.assign(static_cast<std::size_t>(K), 0.0);

  const int nt = std::min(par::effective_threads(), K);
  std::exception_ptr first_error;
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int k = 0; k < K; ++k) {
    try {
      Member& m = st.members[static_cast<std::size_t>(k)];
      const auto& idx = indices[static_cast<std::size_t>(k)];
      double csum = 0.0, psum = 0.0, alpha = 0.0;
      for (int t = 0; t < T; ++t) {
        Batch b = st.buffer.gather(
            {idx.data() + static_cast<std::size_t>(t) * batch, batch});
        StepLosses losses = update_step(m.agent, b, cfg.sac, m.update_rng);
        csum += losses.critic;
        psum += losses.policy;
        alpha = losses.alpha;
      }
      rep.critic_loss[static_cast<std::size_t>(k)] = csum / T;
      rep.policy_loss[static_cast<std::size_t>(k)] = psum / T;
      rep.alpha[static_cast<std::size_t>(k)] = alpha;
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  update_stat(st.members[static_cast<std::size_t>(ke)],
              traj.episodic_return);
  st.t_acc += T;
  st.total_steps += T;
  st.episodes += 1;
  st.rl_update_steps += static_cast<long>(K) * T;
  return rep;
}

namespace {

// Update-count-matched stand-in for distillation: the same number of plain
// SAC update steps, spread round-robin over the members.
void run_extra_updates(EnsembleState& st, const TrainerConfig& cfg, Rng& rng,
                       PhaseReport* report) {
  const int K = static_cast<int>(st.members.size());
  const long total = cfg.extra_updates_per_phase;
  const auto batch = static_cast<std::size_t>(cfg.distill.batch_size);

  std::vector<long> counts(static_cast<std::size_t>(K), 0);
  for (long j = 0; j < total; ++j)
    ++counts[static_cast<std::size_t>((st.extra_cursor + j) % K)];
  st.extra_cursor = (st.extra_cursor + total) % K;

  std::vector<std::vector<std::size_t>> indices(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    indices[static_cast<std::size_t>(k)] = st.buffer.sample_indices(
        static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]) * batch,
        rng);

  const int nt = std::min(par::effective_threads(), K);
  std::exception_ptr first_error;
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1)
  for (int k = 0; k < K; ++k) {
    try {
      Member& m = st.members[static_cast<std::size_t>(k)];
      const auto& idx = indices[static_cast<std::size_t>(k)];
      for (long t = 0; t < counts[static_cast<std::size_t>(k)]; ++t) {
        Batch b = st.buffer.gather(
            {idx.data() + static_cast<std::size_t>(t) * batch, batch});
        update_step(m.agent, b, cfg.sac, m.update_rng);
      }
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  st.rl_update_steps += total;
  if (report) {
    report->kind = "extra";
    report->teacher = -1;
    report->update_steps = total;
    report->extra_per_member = counts;
  }
}

}  // namespace

bool maybe_distill(EnsembleState& st, const TrainerConfig& cfg, Rng& rng,
                   PhaseReport* report) {
  if (st.t_acc < cfg.distill_interval) return false;
  bool did = false;
  if (cfg.distill.mode != DistillMode::None) {
    PhaseReport rep = distill_phase(st.members, st.buffer, cfg.distill, rng);
    st.distill_update_steps += rep.update_steps;
    if (report) *report = std::move(rep);
    did = true;
  } else if (cfg.extra_updates_per_phase > 0) {
    run_extra_updates(st, cfg, rng, report);
  }
  st.t_acc = 0;
  return did;
}

}  // namespace piekd
