#include "autoemb/experiment.hpp"

#include <filesystem>

#include "autoemb/checkpoint.hpp"
#include "autoemb/streaming.hpp"

namespace autoemb {

namespace fs = std::filesystem;

Dataset resolve_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.dataset.empty()) return load_dataset(cfg.dataset);
  return synth_stream(cfg.synth.users, cfg.synth.items, cfg.synth.interactions,
                      cfg.synth.exponent, cfg.synth.seed);
}

RunSummary run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& out_dir, const Dataset& data) {
  fs::create_directories(out_dir);
  auto result = run_stream(data, cfg, seed);
  const fs::path dir(out_dir);
  save_config((dir / "config.json").string(), cfg);
  write_metrics_csv((dir / "metrics.csv").string(), result.log);
  write_examples_csv((dir / "examples.csv").string(), result.log);
  write_figures(out_dir, result.log, cfg.bucket_edges);
  save_checkpoint((dir / "checkpoint.bin").string(), *result.model, cfg, seed);
  auto summary = summarize(result.log, cfg.task, seed, result.fingerprint);
  save_summary((dir / "summary.json").string(), summary);
  return summary;
}

std::vector<SeedRun> run_all_seeds(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("output_dir: required for runs");
  const Dataset data = resolve_dataset(cfg);
  std::vector<SeedRun> runs;
  for (std::uint64_t seed : cfg.seeds) {
    SeedRun r;
    r.seed = seed;
    r.dir = (fs::path(cfg.output_dir) / ("seed_" + std::to_string(seed))).string();
    r.summary = run_experiment(cfg, seed, r.dir, data);
    runs.push_back(std::move(r));
  }
  return runs;
}

} // namespace autoemb
