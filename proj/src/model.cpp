#include "autoemb/model.hpp"

#include "autoemb/error.hpp"
#include "autoemb/init.hpp"
#include "autoemb/rng.hpp"

namespace autoemb {

BatchView BatchView::from(std::span<const Interaction> batch,
                          const std::vector<std::uint64_t>& user_counts,
                          const std::vector<std::uint64_t>& item_counts, Task task) {
  BatchView v;
  v.users.reserve(batch.size());
  v.items.reserve(batch.size());
  v.user_pop.reserve(batch.size());
  v.item_pop.reserve(batch.size());
  for (const Interaction& x : batch) {
    v.users.push_back(x.user);
    v.items.push_back(x.item);
    v.user_pop.push_back(user_counts[x.user]);
    v.item_pop.push_back(item_counts[x.item]);
    if (task == Task::Regression)
      v.labels.binary.push_back(static_cast<double>(x.binary_label));
    else
      v.labels.classes.push_back(static_cast<int>(x.class_label));
  }
  return v;
}

Model::Model(const ExperimentConfig& cfg, std::size_t users, std::size_t items,
             std::uint64_t seed)
    : mode_(cfg.mode), task_(cfg.task), dims_(cfg.dims), users_(users),
      items_(items), feature_size_(cfg.feature_size) {
  Rng root(seed);
  Rng user_bank_rng = root.fork(1);
  Rng item_bank_rng = root.fork(2);
  Rng user_ctrl_rng = root.fork(3);
  Rng item_ctrl_rng = root.fork(4);
  Rng dlrs_rng = root.fork(5);
  Rng fse_rng = root.fork(6);

  const std::size_t n = dims_.size();
  std::size_t dlrs_input;
  if (mode_ == Mode::Fse) {
    const std::size_t width = cfg.total_dim();
    fse_user_ = uniform_init({users_, width}, -0.01, 0.01, fse_rng);
    fse_item_ = uniform_init({items_, width}, -0.01, 0.01, fse_rng);
    dlrs_input = 2 * width;
  } else {
    user_bank_.emplace(users_, dims_, user_bank_rng, cfg.bn_eps, cfg.bn_momentum);
    item_bank_.emplace(items_, dims_, item_bank_rng, cfg.bn_eps, cfg.bn_momentum);
    dlrs_input = 2 * cfg.unified_dim();
    if (mode_ == Mode::DartsWeights) {
      user_darts_.emplace(users_, n);
      item_darts_.emplace(items_, n);
    } else {
      user_ctrl_.emplace(cfg.feature_size, cfg.controller_hidden, n, user_ctrl_rng,
                         cfg.controller_count_scale);
      item_ctrl_.emplace(cfg.feature_size, cfg.controller_hidden, n, item_ctrl_rng,
                         cfg.controller_count_scale);
      user_ctx_.emplace(users_, n, cfg.context_loss_ema);
      item_ctx_.emplace(items_, n, cfg.context_loss_ema);
    }
  }
  dlrs_ = std::make_unique<DlrsModel>(dlrs_input, cfg.dlrs_hidden, task_, dlrs_rng);
}

Model::Forward Model::forward_loss(Tape& tape, const BatchView& batch, BnMode mode) {
  if (batch.size() == 0) throw ContractError("forward on an empty batch");
  Forward fwd;
  TensorPtr u_repr, v_repr;
  if (mode_ == Mode::Fse) {
    u_repr = tape.gather_rows(fse_user_, batch.users, 0, fse_user_->cols());
    v_repr = tape.gather_rows(fse_item_, batch.items, 0, fse_item_->cols());
  } else {
    if (mode_ == Mode::DartsWeights) {
      fwd.alpha = user_darts_->forward(tape, batch.users);
      fwd.beta = item_darts_->forward(tape, batch.items);
    } else {
      auto user_feats = build_feature_batch(batch.users, batch.user_pop, *user_ctx_,
                                            feature_size_);
      auto item_feats = build_feature_batch(batch.items, batch.item_pop, *item_ctx_,
                                            feature_size_);
      features_built_ += batch.size() * 2;
      fwd.alpha = user_ctrl_->forward(tape, user_feats);
      fwd.beta = item_ctrl_->forward(tape, item_feats);
    }
    auto user_candidates = user_bank_->unify(tape, batch.users, mode);
    auto item_candidates = item_bank_->unify(tape, batch.items, mode);
    u_repr = combine_soft(tape, fwd.alpha, user_candidates);
    v_repr = combine_soft(tape, fwd.beta, item_candidates);
  }
  auto h0 = tape.concat_cols(u_repr, v_repr);
  fwd.out = dlrs_->forward(tape, h0);
  fwd.loss = dlrs_->loss(tape, fwd.out, batch.labels);
  return fwd;
}

std::vector<TensorPtr> Model::model_params() {
  std::vector<TensorPtr> p;
  if (mode_ == Mode::Fse) {
    p.push_back(fse_user_);
    p.push_back(fse_item_);
  } else {
    for (auto& t : user_bank_->params()) p.push_back(t);
    for (auto& t : item_bank_->params()) p.push_back(t);
  }
  for (auto& t : dlrs_->params()) p.push_back(t);
  return p;
}

std::vector<TensorPtr> Model::controller_params() {
  std::vector<TensorPtr> p;
  if (user_ctrl_) {
    for (auto& t : user_ctrl_->params()) p.push_back(t);
    for (auto& t : item_ctrl_->params()) p.push_back(t);
  } else if (user_darts_) {
    for (auto& t : user_darts_->params()) p.push_back(t);
    for (auto& t : item_darts_->params()) p.push_back(t);
  }
  return p;
}

std::vector<TensorPtr> Model::all_params() {
  auto p = model_params();
  for (auto& t : controller_params()) p.push_back(t);
  return p;
}

void Model::update_context(const BatchView& batch, const Forward& fwd) {
  if (!user_ctx_) return;
  const auto losses = per_example_losses(task_, fwd.out, batch.labels);
  const std::size_t n = dims_.size();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    user_ctx_->update(batch.users[i], fwd.alpha->values.data() + i * n, losses[i]);
    item_ctx_->update(batch.items[i], fwd.beta->values.data() + i * n, losses[i]);
  }
}

namespace {
constexpr std::uint32_t kModelMagic = 0xAE3BD0DEu;
constexpr std::uint32_t kModelVersion = 1;

void save_tensor(BinaryWriter& w, const TensorPtr& t) { w.f64s(t->values); }

void load_tensor(BinaryReader& r, const TensorPtr& t) {
  auto vals = r.f64s();
  if (vals.size() != t->values.size())
    throw Error("checkpoint tensor size mismatch");
  t->values = std::move(vals);
}

void save_context(BinaryWriter& w, const ContextCache& ctx) {
  w.u64(ctx.entity_count());
  for (std::size_t i = 0; i < ctx.entity_count(); ++i) {
    const auto& e = ctx.get(static_cast<std::uint32_t>(i));
    for (double v : e.prev_weights) w.f64(v);
    w.f64(e.prev_loss);
    w.f64(e.loss_ema);
  }
}

void load_context(BinaryReader& r, ContextCache& ctx) {
  if (r.u64() != ctx.entity_count())
    throw Error("checkpoint context size mismatch");
  for (auto& e : ctx.entries()) {
    for (double& v : e.prev_weights) v = r.f64();
    e.prev_loss = r.f64();
    e.loss_ema = r.f64();
  }
}
} // namespace

void Model::save(BinaryWriter& w) {
  w.u32(kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(mode_));
  w.u32(static_cast<std::uint32_t>(task_));
  if (mode_ == Mode::Fse) {
    save_tensor(w, fse_user_);
    save_tensor(w, fse_item_);
  } else {
    user_bank_->save(w);
    item_bank_->save(w);
  }
  if (user_ctrl_) {
    for (auto& t : user_ctrl_->params()) save_tensor(w, t);
    for (auto& t : item_ctrl_->params()) save_tensor(w, t);
    save_context(w, *user_ctx_);
    save_context(w, *item_ctx_);
  }
  if (user_darts_) {
    save_tensor(w, user_darts_->logits());
    save_tensor(w, item_darts_->logits());
  }
  for (auto& t : dlrs_->params()) save_tensor(w, t);
}

void Model::load(BinaryReader& r) {
  if (r.u32() != kModelMagic) throw Error("not a model checkpoint");
  if (r.u32() != kModelVersion) throw Error("unsupported model checkpoint version");
  if (r.u32() != static_cast<std::uint32_t>(mode_) ||
      r.u32() != static_cast<std::uint32_t>(task_))
    throw Error("checkpoint mode/task do not match the configured model");
  if (mode_ == Mode::Fse) {
    load_tensor(r, fse_user_);
    load_tensor(r, fse_item_);
  } else {
    user_bank_->load(r);
    item_bank_->load(r);
  }
  if (user_ctrl_) {
    for (auto& t : user_ctrl_->params()) load_tensor(r, t);
    for (auto& t : item_ctrl_->params()) load_tensor(r, t);
    load_context(r, *user_ctx_);
    load_context(r, *item_ctx_);
  }
  if (user_darts_) {
    load_tensor(r, user_darts_->logits());
    load_tensor(r, item_darts_->logits());
  }
  for (auto& t : dlrs_->params()) load_tensor(r, t);
}

} // namespace autoemb
