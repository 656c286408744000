#pragma once

#include <cstdint>
#include <vector>

#include "autoemb/binio.hpp"
#include "autoemb/rng.hpp"
#include "autoemb/tape.hpp"
#include "autoemb/tensor.hpp"

namespace autoemb {

// Batch-statistics policy for the unification pipeline.
//   Train: mini-batch statistics, running averages updated.
//   Batch: mini-batch statistics, running averages untouched (evaluation and
//          controller-update forwards, which must not mutate model state).
//   Infer: running statistics.
enum class BnMode { Train, Batch, Infer };

// N embedding spaces per entity class with strictly increasing dimensions,
// plus the per-space linear transforms that unify all spaces to the largest
// dimension and the batch-norm state used to make them magnitude-comparable.
//
// The N per-entity vectors are stored concatenated in one row-major table
// (entity_count x sum(dims)), so one row holds every space's embedding for
// that entity and a batch lookup touches contiguous memory.
class EmbeddingBank {
 public:
  EmbeddingBank(std::size_t entity_count, std::vector<std::size_t> dims, Rng& rng,
                double bn_eps = 1e-5, double bn_momentum = 0.1);

  std::size_t spaces() const { return dims_.size(); }
  std::size_t entity_count() const { return entity_count_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t unified_dim() const { return dims_.back(); }
  std::size_t total_dim() const { return offsets_.back(); }

  // Raw rows of space n (0-based) for a batch of ids: [B x dims[n]].
  TensorPtr lookup(Tape& tape, const std::vector<std::uint32_t>& ids,
                   std::size_t space) const;

  // Full pipeline for one batch: per space, linear transform to the unified
  // dimension, batch normalization per the mode, tanh. Returns N tensors of
  // shape [B x unified_dim] with every element in (-1, 1).
  std::vector<TensorPtr> unify(Tape& tape, const std::vector<std::uint32_t>& ids,
                               BnMode mode);

  std::vector<TensorPtr> params();

  // Raw state access (checkpointing and tests).
  TensorPtr table() { return table_; }
  TensorPtr transform_weight(std::size_t space) { return weights_[space]; }
  TensorPtr transform_bias(std::size_t space) { return biases_[space]; }
  std::vector<double>& running_mean(std::size_t space) { return run_mean_[space]; }
  std::vector<double>& running_var(std::size_t space) { return run_var_[space]; }
  double bn_eps() const { return bn_eps_; }
  double bn_momentum() const { return bn_momentum_; }

  // Versioned little-endian snapshot: header (entity count, space count,
  // dims), the concatenated table, then per space the transform weight,
  // bias, and running statistics.
  void save(BinaryWriter& w);
  void load(BinaryReader& r);

 private:
  std::size_t entity_count_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_; // offsets_[n] = start column of space n; back() = total
  TensorPtr table_;
  std::vector<TensorPtr> weights_; // dims[n] x unified_dim
  std::vector<TensorPtr> biases_;  // unified_dim
  std::vector<std::vector<double>> run_mean_, run_var_;
  double bn_eps_, bn_momentum_;
};

} // namespace autoemb
