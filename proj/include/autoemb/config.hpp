#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "autoemb/dlrs.hpp"

namespace autoemb {

// Embedding-selection strategy for a run.
//   AutoEmb      - controllers trained on validation batches (bilevel).
//   Fse          - one fixed-size embedding of width sum(dims), no controllers.
//   Sam          - controllers and model trained jointly on the training batch.
//   DartsWeights - free per-entity weight vectors trained on validation.
enum class Mode { AutoEmb, Fse, Sam, DartsWeights };

// Fidelity keeps the reference architecture constants; Desk shrinks the
// widths for fast experiments and tests.
enum class Preset { Fidelity, Desk };

struct SynthSpec {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double exponent = 1.2;
  std::uint64_t seed = 7;
  bool enabled() const { return users > 0 && items > 0 && interactions > 0; }
};

struct ExperimentConfig {
  std::string dataset;  // path to csv/csv.gz/cache; empty when synth is used
  SynthSpec synth;
  Task task = Task::Regression;
  Mode mode = Mode::AutoEmb;
  Preset preset = Preset::Fidelity;

  std::vector<std::size_t> dims{2, 16, 128};
  std::size_t batch_size = 500;
  double lr_w = 0.01;
  double lr_theta = 0.001;
  double xi = 0.0;
  bool second_order = false;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir;

  std::vector<std::size_t> dlrs_hidden{512, 512};
  std::size_t controller_hidden = 512;
  std::size_t feature_size = 38;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  double controller_count_scale = 1e-3;
  double context_loss_ema = 0.9;
  std::size_t reservoir_capacity = 50000;
  double offline_fraction = 0.7;
  std::vector<std::uint64_t> bucket_edges{0, 1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  std::string kernel_backend = "openmp";

  std::size_t unified_dim() const { return dims.back(); }
  std::size_t total_dim() const;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

ExperimentConfig make_preset(Preset preset);
// Rewrites the architecture constants of cfg to the preset's values.
void apply_preset(ExperimentConfig& cfg, Preset preset);

std::string to_string(Mode m);
std::string to_string(Task t);
std::string to_string(Preset p);
Mode mode_from_string(const std::string& s);
Task task_from_string(const std::string& s);
Preset preset_from_string(const std::string& s);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

void save_config(const std::string& path, const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

} // namespace autoemb
