#include "piekd/sweep.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include <json.hpp>

#include "piekd/par.hpp"

namespace piekd {

namespace {
std::string num(double v) { return nlohmann::json(v).dump(); }
}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto range = text.find("..");
  try {
    if (range != std::string::npos) {
      const std::uint64_t lo = std::stoull(text.substr(0, range));
      const std::uint64_t hi = std::stoull(text.substr(range + 2));
      check(lo <= hi, "seeds: bad range ", text);
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::size_t pos = 0;
      while (pos < text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        seeds.push_back(std::stoull(text.substr(pos, comma - pos)));
        pos = comma + 1;
      }
    }
  } catch (const std::logic_error&) {
    fail("seeds: cannot parse \"", text, "\" (use e.g. 0..4 or 0,1,2)");
  }
  check(!seeds.empty(), "seeds: empty list");
  return seeds;
}

SweepResult sweep(const TrainerConfig& base,
                  const std::vector<std::uint64_t>& seeds,
                  const std::filesystem::path& out_dir, int jobs,
                  bool quiet) {
  check(seeds.size() >= 2, "sweep: need at least 2 seeds");
  std::filesystem::create_directories(out_dir);

  if (jobs <= 0)
    jobs = std::min<int>(static_cast<int>(seeds.size()),
                         par::hardware_threads());

  SweepResult result;
  result.seeds = seeds;
  result.runs.resize(seeds.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;

  auto worker = [&]() {
    // parallel jobs stay single-threaded inside; a single job inherits
    // whatever the caller configured
    std::optional<par::LocalThreadsGuard> guard;
    if (jobs > 1) guard.emplace(1);
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) return;
      try {
        TrainerConfig cfg = base;
        cfg.seed = seeds[i];
        result.runs[i] = run_arm(
            cfg, out_dir / ("seed_" + std::to_string(seeds[i])), quiet);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // Align evaluation points across seeds.
  const std::size_t n_points = result.runs[0].evals.size();
  for (const RunResult& r : result.runs) {
    check(r.evals.size() == n_points,
          "sweep: runs disagree on evaluation point count");
    for (std::size_t p = 0; p < n_points; ++p)
      check(r.evals[p].step == result.runs[0].evals[p].step,
            "sweep: runs disagree on evaluation steps");
  }

  Rng boot_rng(derive_seed(base.seed, 4));
  for (std::size_t p = 0; p < n_points; ++p) {
    std::vector<double> best, worst;
    for (const RunResult& r : result.runs) {
      best.push_back(r.evals[p].best);
      worst.push_back(r.evals[p].worst);
    }
    const BootstrapCI ci = bootstrap_mean_ci(best, 10000, boot_rng);
    double wmean = 0.0;
    for (double w : worst) wmean += w;
    wmean /= static_cast<double>(worst.size());
    result.points.push_back(
        {result.runs[0].evals[p].step, ci.mean, wmean, ci.lo, ci.hi});
  }

  result.csv_path = out_dir / "sweep.csv";
  std::ofstream csv(result.csv_path, std::ios::binary);
  check(static_cast<bool>(csv), "sweep: cannot write ",
        result.csv_path.string());
  csv << "step,best_mean,worst_mean,ci_lo,ci_hi\n";
  for (const SweepPoint& pt : result.points) {
    csv << pt.step << "," << num(pt.best_mean) << "," << num(pt.worst_mean)
        << "," << num(pt.ci_lo) << "," << num(pt.ci_hi) << "\n";
  }
  return result;
}

}  // namespace piekd
