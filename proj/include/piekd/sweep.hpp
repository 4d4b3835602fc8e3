#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "piekd/trainer.hpp"

namespace piekd {

struct SweepPoint {
  long step = 0;
  double best_mean = 0.0;   // mean over seeds of best-of-ensemble return
  double worst_mean = 0.0;  // mean over seeds of worst-of-ensemble return
  double ci_lo = 0.0;       // 95% percentile bootstrap over the best values
  double ci_hi = 0.0;
};

struct SweepResult {
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> runs;  // aligned with seeds
  std::vector<SweepPoint> points;
  std::filesystem::path csv_path;
};

// Runs one arm per seed (jobs in parallel, each pinned to one thread when
// parallel), aligns the evaluation points, and aggregates best-of-ensemble
// curves with a 10^4-resample percentile bootstrap.
SweepResult sweep(const TrainerConfig& base,
                  const std::vector<std::uint64_t>& seeds,
                  const std::filesystem::path& out_dir, int jobs = 0,
                  bool quiet = true);

// "0..4" (inclusive) or "0,1,2"
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace piekd
