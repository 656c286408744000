#pragma once

#include <string>

#include "autoemb/model.hpp"

namespace autoemb {

// Experiment checkpoint container: a versioned header, the serialized
// configuration, then the model state (embedding bank snapshots, controller
// or weight-table parameters, context caches, prediction network).
void save_checkpoint(const std::string& path, Model& model,
                     const ExperimentConfig& cfg, std::uint64_t seed);

struct CheckpointHeader {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::size_t users = 0, items = 0;
};

// Reads the header only (to size the model to load into).
CheckpointHeader read_checkpoint_header(const std::string& path);

// Restores model state; the model must have been constructed with matching
// configuration and entity counts.
void load_checkpoint(const std::string& path, Model& model);

} // namespace autoemb
