#pragma once

#include <cstdint>
#include <vector>

#include "autoemb/rng.hpp"
#include "autoemb/tape.hpp"
#include "autoemb/tensor.hpp"

namespace autoemb {

// Rolling per-entity signals fed back into the controller: the weights it
// emitted for the entity's last training example, that example's loss, and
// an exponential moving average of the losses.
struct EntityContext {
  std::vector<double> prev_weights;
  double prev_loss = 0.0;
  double loss_ema = 0.0;
};

class ContextCache {
 public:
  ContextCache(std::size_t entity_count, std::size_t n_spaces, double ema = 0.9);

  const EntityContext& get(std::uint32_t id) const { return entries_[id]; }
  void update(std::uint32_t id, const double* weights, double loss);

  std::size_t entity_count() const { return entries_.size(); }
  std::size_t spaces() const { return n_spaces_; }
  double ema_coefficient() const { return ema_; }

  // Checkpoint access.
  std::vector<EntityContext>& entries() { return entries_; }

 private:
  std::vector<EntityContext> entries_;
  std::size_t n_spaces_;
  double ema_;
};

// Fixed-length controller input: popularity as raw count and log1p(count),
// the entity's previous weights/loss context, zero-padded to feature_size.
std::vector<double> build_features(std::uint32_t entity_id, std::uint64_t popularity,
                                   const ContextCache& context,
                                   std::size_t feature_size);

// Batched build_features as a constant [B x F] tensor.
TensorPtr build_feature_batch(const std::vector<std::uint32_t>& ids,
                              const std::vector<std::uint64_t>& popularity,
                              const ContextCache& context, std::size_t feature_size);

// MLP mapping features to softmax weights over the N embedding spaces:
// feature_size -> hidden -> hidden -> n_spaces with tanh activations inside
// and softmax on top. The raw-count input slot is scaled by a fixed constant
// so large popularity counts cannot saturate the first tanh layer.
class ControllerNet {
 public:
  ControllerNet(std::size_t feature_size, std::size_t hidden, std::size_t n_spaces,
                Rng& rng, double count_scale = 1e-3);

  TensorPtr forward(Tape& tape, const TensorPtr& features) const;
  std::vector<TensorPtr> params();

  std::size_t feature_size() const { return feature_size_; }
  std::size_t n_spaces() const { return n_spaces_; }

 private:
  std::size_t feature_size_, hidden_, n_spaces_;
  TensorPtr w1_, b1_, w2_, b2_, w3_, b3_;
  std::vector<double> input_scale_;
};

// Index of the maximal weight; ties break toward the smaller index (the
// smaller embedding dimension).
std::size_t select_hard(const std::vector<double>& weights);
std::size_t select_hard(const TensorPtr& weights);

// Weighted sum of the candidates scaled by 1/N. Weights are [N] or [B x N].
TensorPtr combine_soft(Tape& tape, const TensorPtr& weights,
                       const std::vector<TensorPtr>& candidates);

// Baseline weight source: one free logit vector of length N per entity,
// trained directly instead of being produced from features.
class DartsWeightTable {
 public:
  DartsWeightTable(std::size_t entity_count, std::size_t n_spaces);

  // Softmax of the gathered logit rows: [B x N].
  TensorPtr forward(Tape& tape, const std::vector<std::uint32_t>& ids) const;
  std::vector<TensorPtr> params() { return {logits_}; }
  TensorPtr logits() { return logits_; }

 private:
  TensorPtr logits_;
};

} // namespace autoemb
