#pragma once

#include <string>
#include <vector>

#include "autoemb/config.hpp"
#include "autoemb/data.hpp"
#include "autoemb/report.hpp"

namespace autoemb {

// Loads cfg.dataset or generates the configured synthetic stream.
Dataset resolve_dataset(const ExperimentConfig& cfg);

// One seed of the experiment: runs the stream and writes metrics.csv,
// examples.csv, figures/, config.json, summary.json and checkpoint.bin into
// out_dir. Returns the run's summary.
RunSummary run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& out_dir, const Dataset& data);

struct SeedRun {
  std::uint64_t seed = 0;
  std::string dir;
  RunSummary summary;
};

// Runs every configured seed into <output_dir>/seed_<s>/.
std::vector<SeedRun> run_all_seeds(const ExperimentConfig& cfg);

} // namespace autoemb
