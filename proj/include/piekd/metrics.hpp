#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include "piekd/config.hpp"
#include "piekd/distill.hpp"
#include "piekd/ensemble.hpp"

namespace piekd {

struct EvalRecord {
  long step = 0;
  std::vector<double> member_mean;
  double best = 0.0;
  double worst = 0.0;
};

// One JSON object per line. Content is a pure function of the run's
// computation (no wall-clock, no paths, no arm label), so identical runs
// produce byte-identical files.
class MetricsWriter {
public:
  explicit MetricsWriter(const std::filesystem::path& path);

  void header(const TrainerConfig& cfg);
  void round(const EnsembleState& st, const RoundReport& rep);
  void phase(const EnsembleState& st, const PhaseReport& rep);
  void eval(const EvalRecord& rec);
  void close();

private:
  std::ofstream out_;
};

}  // namespace piekd
