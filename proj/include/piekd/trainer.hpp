#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "piekd/config.hpp"
#include "piekd/ensemble.hpp"
#include "piekd/metrics.hpp"

namespace piekd {

// Each member runs n deterministic-action episodes on the evaluation env;
// all members see the same episode seeds. Touches neither the buffer nor the
// return windows.
EvalRecord evaluate(const EnsembleState& st, Env& env, int episodes,
                    Rng& eval_rng);

struct RunResult {
  std::filesystem::path metrics_path;
  std::filesystem::path checkpoint_path;
  std::vector<EvalRecord> evals;
  long total_steps = 0;
  long rl_update_steps = 0;
  long distill_update_steps = 0;
};

// Executes the configured arm end to end: training loop, periodic
// evaluation, distillation (or extra-update) phases, metrics stream, final
// checkpoint. Everything is a deterministic function of (config, seed).
RunResult run_arm(TrainerConfig cfg, const std::filesystem::path& out_dir,
                  bool quiet = true);

struct BootstrapCI {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// 95% percentile bootstrap of the sample mean.
BootstrapCI bootstrap_mean_ci(std::span<const double> values, int resamples,
                              Rng& rng);

}  // namespace piekd
