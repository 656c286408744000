#include "autoemb/controller.hpp"

#include <cmath>

#include "autoemb/error.hpp"
#include "autoemb/init.hpp"

namespace autoemb {

ContextCache::ContextCache(std::size_t entity_count, std::size_t n_spaces, double ema)
    : entries_(entity_count), n_spaces_(n_spaces), ema_(ema) {
  for (auto& e : entries_) e.prev_weights.assign(n_spaces_, 0.0);
}

void ContextCache::update(std::uint32_t id, const double* weights, double loss) {
  EntityContext& e = entries_[id];
  e.prev_weights.assign(weights, weights + n_spaces_);
  e.prev_loss = loss;
  e.loss_ema = ema_ * e.loss_ema + (1.0 - ema_) * loss;
}

std::vector<double> build_features(std::uint32_t entity_id, std::uint64_t popularity,
                                   const ContextCache& context,
                                   std::size_t feature_size) {
  const std::size_t n = context.spaces();
  if (feature_size < n + 4)
    throw ConfigError("feature size " + std::to_string(feature_size) +
                      " too small for " + std::to_string(n) + " spaces");
  std::vector<double> f(feature_size, 0.0);
  f[0] = static_cast<double>(popularity);
  f[1] = std::log1p(static_cast<double>(popularity));
  const EntityContext& ctx = context.get(entity_id);
  for (std::size_t i = 0; i < n; ++i) f[2 + i] = ctx.prev_weights[i];
  f[2 + n] = ctx.prev_loss;
  f[3 + n] = ctx.loss_ema;
  return f;
}

TensorPtr build_feature_batch(const std::vector<std::uint32_t>& ids,
                              const std::vector<std::uint64_t>& popularity,
                              const ContextCache& context, std::size_t feature_size) {
  auto out = Tensor::make({ids.size(), feature_size});
  for (std::size_t b = 0; b < ids.size(); ++b) {
    auto f = build_features(ids[b], popularity[b], context, feature_size);
    std::copy(f.begin(), f.end(), out->values.begin() + b * feature_size);
  }
  return out;
}

ControllerNet::ControllerNet(std::size_t feature_size, std::size_t hidden,
                             std::size_t n_spaces, Rng& rng, double count_scale)
    : feature_size_(feature_size), hidden_(hidden), n_spaces_(n_spaces) {
  w1_ = xavier_init({feature_size_, hidden_}, feature_size_, hidden_, rng);
  b1_ = zeros_param({hidden_});
  w2_ = xavier_init({hidden_, hidden_}, hidden_, hidden_, rng);
  b2_ = zeros_param({hidden_});
  w3_ = xavier_init({hidden_, n_spaces_}, hidden_, n_spaces_, rng);
  b3_ = zeros_param({n_spaces_});
  input_scale_.assign(feature_size_, 1.0);
  input_scale_[0] = count_scale;
}

TensorPtr ControllerNet::forward(Tape& tape, const TensorPtr& features) const {
  if (features->cols() != feature_size_)
    throw ContractError("controller features have width " +
                        std::to_string(features->cols()) + ", expected " +
                        std::to_string(feature_size_));
  auto x = tape.mul_rowvec(features, input_scale_);
  auto h1 = tape.tanh(tape.add_rowvec(tape.matmul(x, w1_), b1_));
  auto h2 = tape.tanh(tape.add_rowvec(tape.matmul(h1, w2_), b2_));
  return tape.softmax(tape.add_rowvec(tape.matmul(h2, w3_), b3_));
}

std::vector<TensorPtr> ControllerNet::params() {
  return {w1_, b1_, w2_, b2_, w3_, b3_};
}

std::size_t select_hard(const std::vector<double>& weights) {
  if (weights.empty()) throw ContractError("select_hard: empty weights");
  std::size_t best = 0;
  for (std::size_t i = 1; i < weights.size(); ++i)
    if (weights[i] > weights[best]) best = i;
  return best;
}

std::size_t select_hard(const TensorPtr& weights) {
  return select_hard(weights->values);
}

TensorPtr combine_soft(Tape& tape, const TensorPtr& weights,
                       const std::vector<TensorPtr>& candidates) {
  return tape.mix(weights, candidates, 1.0 / static_cast<double>(candidates.size()));
}

DartsWeightTable::DartsWeightTable(std::size_t entity_count, std::size_t n_spaces) {
  logits_ = zeros_param({entity_count, n_spaces});
}

TensorPtr DartsWeightTable::forward(Tape& tape,
                                    const std::vector<std::uint32_t>& ids) const {
  return tape.softmax(tape.gather_rows(logits_, ids, 0, logits_->cols()));
}

} // namespace autoemb
