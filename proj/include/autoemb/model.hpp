#pragma once

#include <memory>
#include <optional>
#include <span>

#include "autoemb/binio.hpp"
#include "autoemb/config.hpp"
#include "autoemb/controller.hpp"
#include "autoemb/data.hpp"
#include "autoemb/dlrs.hpp"
#include "autoemb/embedding_bank.hpp"

namespace autoemb {

// One mini-batch with everything the forward pass needs: dense ids, the
// popularity of each entity at prediction time, and task labels.
struct BatchView {
  std::vector<std::uint32_t> users, items;
  std::vector<std::uint64_t> user_pop, item_pop;
  LabelBatch labels;

  std::size_t size() const { return users.size(); }
  static BatchView from(std::span<const Interaction> batch,
                        const std::vector<std::uint64_t>& user_counts,
                        const std::vector<std::uint64_t>& item_counts, Task task);
};

// Full per-mode parameter bundle and forward path. The parameter partition
// follows the optimization scheme: model_params() is everything trained on
// training batches (embedding tables, unification transforms, prediction
// network), controller_params() is whatever produces the mixture weights
// (controller MLPs, or the free weight tables; empty for fse).
class Model {
 public:
  Model(const ExperimentConfig& cfg, std::size_t users, std::size_t items,
        std::uint64_t seed);

  struct Forward {
    TensorPtr loss;
    DlrsOutput out;
    TensorPtr alpha, beta; // [B x N] mixture weights; null in fse mode
  };

  Forward forward_loss(Tape& tape, const BatchView& batch, BnMode mode);

  std::vector<TensorPtr> model_params();
  std::vector<TensorPtr> controller_params();
  std::vector<TensorPtr> all_params();

  // Feeds each example's mixture weights and loss back into the per-entity
  // context caches (autoemb and sam modes only).
  void update_context(const BatchView& batch, const Forward& fwd);

  Mode mode() const { return mode_; }
  Task task() const { return task_; }
  std::size_t n_spaces() const { return dims_.size(); }
  std::size_t user_count() const { return users_; }
  std::size_t item_count() const { return items_; }

  EmbeddingBank* user_bank() { return user_bank_ ? &*user_bank_ : nullptr; }
  EmbeddingBank* item_bank() { return item_bank_ ? &*item_bank_ : nullptr; }
  ControllerNet* user_controller() { return user_ctrl_ ? &*user_ctrl_ : nullptr; }
  ControllerNet* item_controller() { return item_ctrl_ ? &*item_ctrl_ : nullptr; }
  DartsWeightTable* user_weights() { return user_darts_ ? &*user_darts_ : nullptr; }
  DartsWeightTable* item_weights() { return item_darts_ ? &*item_darts_ : nullptr; }
  DlrsModel& dlrs() { return *dlrs_; }
  TensorPtr fse_user_table() { return fse_user_; }
  TensorPtr fse_item_table() { return fse_item_; }
  ContextCache* user_context() { return user_ctx_ ? &*user_ctx_ : nullptr; }
  ContextCache* item_context() { return item_ctx_ ? &*item_ctx_ : nullptr; }

  // Number of controller feature vectors built so far (instrumentation).
  std::uint64_t features_built() const { return features_built_; }

  void save(BinaryWriter& w);
  void load(BinaryReader& r);

 private:
  Mode mode_;
  Task task_;
  std::vector<std::size_t> dims_;
  std::size_t users_, items_, feature_size_;

  std::optional<EmbeddingBank> user_bank_, item_bank_;
  std::optional<ControllerNet> user_ctrl_, item_ctrl_;
  std::optional<DartsWeightTable> user_darts_, item_darts_;
  std::optional<ContextCache> user_ctx_, item_ctx_;
  TensorPtr fse_user_, fse_item_;
  std::unique_ptr<DlrsModel> dlrs_;

  std::uint64_t features_built_ = 0;
};

} // namespace autoemb
