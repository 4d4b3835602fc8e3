#include "piekd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "piekd/checkpoint.hpp"
#include "piekd/par.hpp"

namespace piekd {

EvalRecord evaluate(const EnsembleState& st, Env& env, int episodes,
                    Rng& eval_rng) {
  check(episodes >= 1, "evaluate: episodes must be >= 1");
  // One seed per evaluation point; every member replays the same episode
  // starts so the best/worst comparison is on common initial states.
  const std::uint64_t point_seed = eval_rng.next_u64();

  EvalRecord rec;
  rec.step = st.total_steps;
  rec.member_mean.reserve(st.members.size());
  for (const Member& m : st.members) {
    Rng r(point_seed);
    double sum = 0.0;
    for (int e = 0; e < episodes; ++e) {
      Trajectory traj = rollout(
          env, make_actor(m.agent.policy, nullptr, /*deterministic=*/true),
          r);
      sum += traj.episodic_return;
    }
    rec.member_mean.push_back(sum / episodes);
  }
  rec.best = *std::max_element(rec.member_mean.begin(), rec.member_mean.end());
  rec.worst =
      *std::min_element(rec.member_mean.begin(), rec.member_mean.end());
  return rec;
}

RunResult run_arm(TrainerConfig cfg, const std::filesystem::path& out_dir,
                  bool quiet) {
  cfg.apply_arm();
  cfg.validate();

  std::optional<par::LocalThreadsGuard> guard;
  if (cfg.threads > 0) guard.emplace(cfg.threads);

  auto env = make_env(cfg.env_id);
  auto eval_env = make_env(cfg.env_id);
  cfg.validate_for(env->spec());

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "config.json", std::ios::binary);
    check(static_cast<bool>(f), "run: cannot write config echo");
    f << cfg.to_json_text(/*include_arm=*/true) << "\n";
  }

  EnsembleState st = init_ensemble(cfg, env->spec());
  Rng round_rng(derive_seed(cfg.seed, 1));
  Rng eval_rng(derive_seed(cfg.seed, 2));
  Rng distill_rng(derive_seed(cfg.seed, 3));

  MetricsWriter metrics(out_dir / "metrics.jsonl");
  metrics.header(cfg);

  RunResult res;
  res.metrics_path = out_dir / "metrics.jsonl";
  res.checkpoint_path = out_dir / "checkpoint.bin";

  while (st.total_steps < cfg.total_timesteps) {
    RoundReport rr = joint_training_round(st, *env, round_rng, cfg);
    metrics.round(st, rr);

    PhaseReport ph;
    maybe_distill(st, cfg, distill_rng, &ph);
    if (ph.kind != "none") metrics.phase(st, ph);

    if (st.total_steps % cfg.eval_interval == 0 &&
        st.total_steps <= cfg.total_timesteps) {
      EvalRecord er = evaluate(st, *eval_env, cfg.eval_episodes, eval_rng);
      metrics.eval(er);
      res.evals.push_back(er);
      if (!quiet) {
        std::cout << "step " << er.step << " best " << er.best << " worst "
                  << er.worst << "\n";
      }
    }
  }
  metrics.close();

  checkpoint::save(res.checkpoint_path, st, cfg);
  if (cfg.dump_buffer) {
    std::ofstream f(out_dir / "buffer.bin", std::ios::binary);
    check(static_cast<bool>(f), "run: cannot write buffer dump");
    st.buffer.dump(f);
  }

  res.total_steps = st.total_steps;
  res.rl_update_steps = st.rl_update_steps;
  res.distill_update_steps = st.distill_update_steps;
  return res;
}

BootstrapCI bootstrap_mean_ci(std::span<const double> values, int resamples,
                              Rng& rng) {
  check(!values.empty(), "bootstrap: empty sample");
  check(resamples >= 1, "bootstrap: resamples must be >= 1");
  const std::size_t n = values.size();

  BootstrapCI out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(n);

  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.uniform_index(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto idx = [&](double q) {
    return static_cast<std::size_t>(
        std::llround(q * static_cast<double>(resamples - 1)));
  };
  out.lo = means[idx(0.025)];
  out.hi = means[idx(0.975)];
  return out;
}

}  // namespace piekd
