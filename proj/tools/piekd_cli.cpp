#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

#include "piekd/checkpoint.hpp"
#include "piekd/par.hpp"
#include "piekd/sweep.hpp"
#include "piekd/trainer.hpp"

namespace {

using piekd::TrainerConfig;

struct CommonFlags {
  std::string arm;
  std::string env;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  long total = 0;
  int threads = 0;
  bool dump_buffer = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--arm", f.arm, "vanilla|ensemble|piekd|piekd-hardcopy|"
                                  "piekd-random-teacher|vanilla-extra|"
                                  "ensemble-extra");
  cmd->add_option("--env", f.env, "pendulum|mountaincar|pointmass");
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--out", f.out_dir, "output directory")->required();
  cmd->add_option("--total", f.total, "override total timesteps");
  cmd->add_option("--threads", f.threads, "thread cap for this run");
  cmd->add_flag("--dump-buffer", f.dump_buffer,
                "write the replay buffer to out/buffer.bin");
  cmd->add_flag("--quiet", f.quiet, "suppress progress lines");
}

TrainerConfig build_config(const CommonFlags& f) {
  TrainerConfig cfg;
  if (!f.config_path.empty())
    cfg = TrainerConfig::from_json_file(f.config_path);
  if (!f.arm.empty()) cfg.arm = f.arm;
  if (!f.env.empty()) cfg.env_id = f.env;
  if (f.seed_set) cfg.seed = f.seed;
  if (f.total > 0) cfg.total_timesteps = f.total;
  if (f.threads > 0) cfg.threads = f.threads;
  if (f.dump_buffer) cfg.dump_buffer = true;
  return cfg;
}

int run_train(const CommonFlags& f) {
  TrainerConfig cfg = build_config(f);
  piekd::RunResult res = run_arm(cfg, f.out_dir, f.quiet);
  nlohmann::json j;
  j["metrics"] = res.metrics_path.string();
  j["checkpoint"] = res.checkpoint_path.string();
  j["total_steps"] = res.total_steps;
  j["rl_update_steps"] = res.rl_update_steps;
  j["distill_update_steps"] = res.distill_update_steps;
  if (!res.evals.empty()) j["final_best"] = res.evals.back().best;
  std::cout << j.dump() << "\n";
  return 0;
}

int run_sweep(const CommonFlags& f, const std::string& seeds_text, int jobs) {
  TrainerConfig cfg = build_config(f);
  const auto seeds = piekd::parse_seed_list(seeds_text);
  piekd::SweepResult res = piekd::sweep(cfg, seeds, f.out_dir, jobs, f.quiet);
  nlohmann::json j;
  j["csv"] = res.csv_path.string();
  j["seeds"] = res.seeds;
  if (!res.points.empty()) {
    j["final_best_mean"] = res.points.back().best_mean;
    j["final_ci"] = {res.points.back().ci_lo, res.points.back().ci_hi};
  }
  std::cout << j.dump() << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path, int episodes,
             std::uint64_t seed) {
  auto loaded = piekd::checkpoint::load(checkpoint_path);
  auto env = piekd::make_env(loaded.env_id);
  piekd::Rng eval_rng(piekd::derive_seed(seed, 2));
  piekd::EvalRecord rec =
      piekd::evaluate(loaded.state, *env, episodes, eval_rng);
  nlohmann::json j;
  j["env"] = loaded.env_id;
  j["step"] = rec.step;
  j["member_mean"] = rec.member_mean;
  j["best"] = rec.best;
  j["worst"] = rec.worst;
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble SAC trainer with periodic intra-ensemble knowledge "
               "distillation"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  CLI::App* train = app.add_subcommand("train", "train one arm");
  add_common(train, train_flags);
  auto* seed_opt =
      train->add_option("--seed", train_flags.seed, "master seed");

  CommonFlags sweep_flags;
  std::string seeds_text = "0..4";
  int jobs = 0;
  CLI::App* sw = app.add_subcommand("sweep", "train several seeds and "
                                             "aggregate learning curves");
  add_common(sw, sweep_flags);
  sw->add_option("--seeds", seeds_text, "seed list, e.g. 0..4 or 0,1,2");
  sw->add_option("--jobs", jobs, "parallel runs (default: min(seeds, cores))");

  std::string checkpoint_path;
  int eval_episodes = 10;
  std::uint64_t eval_seed = 0;
  CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  ev->add_option("--episodes", eval_episodes, "evaluation episodes");
  ev->add_option("--seed", eval_seed, "evaluation seed");

  CLI11_PARSE(app, argc, argv);
  train_flags.seed_set = seed_opt->count() > 0;

  try {
    if (app.got_subcommand(train)) return run_train(train_flags);
    if (app.got_subcommand(sw)) return run_sweep(sweep_flags, seeds_text, jobs);
    if (app.got_subcommand(ev))
      return run_eval(checkpoint_path, eval_episodes, eval_seed);
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 1;
}
