#include <cmath>

#include <doctest.h>

#include "autoemb/error.hpp"
#include "autoemb/optimizer.hpp"

#include "gradcheck.hpp"

using namespace autoemb;

namespace {

// L_train(w, t) = (w - t)^2, L_val(w, t) = w*t + w^2. Small enough to verify
// the one-step update against the closed-form derivation.
class ScalarToyProblem final : public BilevelProblem {
 public:
  ScalarToyProblem(double w, double t)
      : w_(Tensor::scalar(w, true)), t_(Tensor::scalar(t, true)) {}

  TensorPtr train_loss(Tape& tape) override {
    auto d = tape.sub(w_, t_);
    return tape.mul(d, d);
  }
  TensorPtr val_loss(Tape& tape) override {
    return tape.add(tape.mul(w_, t_), tape.mul(w_, w_));
  }
  std::vector<TensorPtr> model_params() override { return {w_}; }
  std::vector<TensorPtr> controller_params() override { return {t_}; }

  double w() const { return w_->values[0]; }
  double t() const { return t_->values[0]; }

 private:
  TensorPtr w_, t_;
};

ExperimentConfig tiny_config(Mode mode, Task task = Task::Regression) {
  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.task = task;
  cfg.dims = {2, 4};
  cfg.dlrs_hidden = {6};
  cfg.controller_hidden = 5;
  cfg.feature_size = 9;
  cfg.batch_size = 4;
  return cfg;
}

BatchView tiny_batch(Task task = Task::Regression) {
  BatchView v;
  v.users = {0, 1, 2, 1};
  v.items = {3, 0, 2, 4};
  v.user_pop = {0, 3, 7, 3};
  v.item_pop = {1, 0, 2, 9};
  if (task == Task::Regression)
    v.labels.binary = {1, 0, 1, 1};
  else
    v.labels.classes = {4, 0, 2, 3};
  return v;
}

BatchView other_batch(Task task = Task::Regression) {
  BatchView v;
  v.users = {2, 2, 0, 3};
  v.items = {1, 4, 3, 2};
  v.user_pop = {5, 5, 1, 0};
  v.item_pop = {2, 8, 4, 1};
  if (task == Task::Regression)
    v.labels.binary = {0, 1, 0, 1};
  else
    v.labels.classes = {1, 3, 0, 2};
  return v;
}

std::vector<std::vector<double>> snapshot(const std::vector<TensorPtr>& params) {
  std::vector<std::vector<double>> out;
  for (const auto& p : params) out.push_back(p->values);
  return out;
}

} // namespace

TEST_CASE("sgd_step examples") {
  auto p = Tensor::scalar(1.0, true);
  p->ensure_grad();
  p->grad[0] = 2.0;
  sgd_step({p}, 0.1);
  CHECK(p->values[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p->grad[0] == 0.0);

  p->grad[0] = 5.0;
  sgd_step({p}, 0.0);
  CHECK(p->values[0] == doctest::Approx(0.8).epsilon(1e-15));

  // two consecutive steps equal one step at summed displacement
  auto q1 = Tensor::scalar(2.0, true);
  auto q2 = Tensor::scalar(2.0, true);
  q1->ensure_grad();
  q2->ensure_grad();
  q1->grad[0] = 3.0;
  sgd_step({q1}, 0.05);
  q1->grad[0] = 3.0;
  sgd_step({q1}, 0.05);
  q2->grad[0] = 3.0;
  sgd_step({q2}, 0.1);
  CHECK(q1->values[0] == doctest::Approx(q2->values[0]).epsilon(1e-15));

  auto no_grad = Tensor::scalar(1.0, true);
  CHECK_THROWS_AS(sgd_step({no_grad}, 0.1), ContractError);
}

TEST_CASE("first-order toy step is plain descent on the validation loss") {
  ScalarToyProblem prob(0.8, -0.3);
  const double lr = 0.05;
  // d L_val / d t = w
  const double expected = -0.3 - lr * 0.8;
  bilevel_controller_step(prob, 0.0, lr, false);
  CHECK(prob.t() == doctest::Approx(expected).epsilon(1e-15));
  CHECK(prob.w() == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("second-order toy step matches the symbolic derivation") {
  const double w0 = 0.8, t0 = -0.3, xi = 0.07, lr = 0.05;
  ScalarToyProblem prob(w0, t0);
  bilevel_controller_step(prob, xi, lr, true);

  // w' = w - xi * 2(w - t); gradient = w' + 2 xi (t + 2 w')
  const double wp = w0 - xi * 2.0 * (w0 - t0);
  const double dtheta = wp + 2.0 * xi * (t0 + 2.0 * wp);
  CHECK(prob.t() == doctest::Approx(t0 - lr * dtheta).epsilon(1e-6));
  // W restored exactly
  CHECK(prob.w() == w0);
}

TEST_CASE("second-order with xi = 0 is a config error") {
  ScalarToyProblem prob(1.0, 1.0);
  CHECK_THROWS_AS(bilevel_controller_step(prob, 0.0, 0.1, true), ConfigError);
}

TEST_CASE("first-order controller_step equals manual descent bitwise") {
  const auto cfg = tiny_config(Mode::AutoEmb);
  Model a(cfg, 4, 5, 77);
  Model b(cfg, 4, 5, 77);
  auto train = tiny_batch();
  auto val = other_batch();

  OptimizerConfig opt = OptimizerConfig::from(cfg);
  controller_step(a, val, train, opt);

  {
    Tape tape;
    auto fwd = b.forward_loss(tape, val, BnMode::Batch);
    tape.backward(fwd.loss);
    sgd_step(b.controller_params(), opt.lr_theta);
    zero_grads(b.model_params());
  }

  auto pa = a.controller_params();
  auto pb = b.controller_params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(pa[i]->values == pb[i]->values);
  // W untouched on both sides
  auto wa = a.model_params();
  auto wb = b.model_params();
  for (std::size_t i = 0; i < wa.size(); ++i)
    CHECK(wa[i]->values == wb[i]->values);
}

TEST_CASE("zero validation gradient leaves the controllers unchanged") {
  const auto cfg = tiny_config(Mode::AutoEmb);
  Model model(cfg, 4, 5, 78);
  for (auto* bank : {model.user_bank(), model.item_bank()}) {
    REQUIRE(bank != nullptr);
    for (auto& p : bank->params())
      for (double& v : p->values) v = 0.0;
  }
  const auto before = snapshot(model.controller_params());
  controller_step(model, other_batch(), tiny_batch(), OptimizerConfig::from(cfg));
  const auto after = snapshot(model.controller_params());
  CHECK(before == after);
}

TEST_CASE("W is restored bitwise by a second-order controller_step") {
  auto cfg = tiny_config(Mode::AutoEmb);
  cfg.xi = 0.01;
  cfg.second_order = true;
  Model model(cfg, 4, 5, 79);
  const auto w_before = snapshot(model.model_params());
  const auto theta_before = snapshot(model.controller_params());
  controller_step(model, other_batch(), tiny_batch(), OptimizerConfig::from(cfg));
  CHECK(snapshot(model.model_params()) == w_before);
  CHECK(snapshot(model.controller_params()) != theta_before);
}

TEST_CASE("train_step: lr 0 freezes W, loss still reported") {
  const auto cfg = tiny_config(Mode::AutoEmb);
  Model model(cfg, 4, 5, 80);
  OptimizerConfig opt = OptimizerConfig::from(cfg);
  opt.lr_w = 0.0;
  const auto before = snapshot(model.model_params());
  auto fwd = train_step(model, tiny_batch(), opt);
  CHECK(fwd.loss->values[0] > 0.0);
  CHECK(snapshot(model.model_params()) == before);
}

TEST_CASE("train_step decreases the loss on a repeated batch") {
  const auto cfg = tiny_config(Mode::AutoEmb);
  Model model(cfg, 4, 5, 81);
  OptimizerConfig opt = OptimizerConfig::from(cfg);
  opt.lr_w = 0.05;
  auto batch = tiny_batch();
  double prev = train_step(model, batch, opt).loss->values[0];
  for (int i = 0; i < 10; ++i) {
    const double cur = train_step(model, batch, opt).loss->values[0];
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("train_step leaves controller parameters bit-identical") {
  const auto cfg = tiny_config(Mode::AutoEmb);
  Model model(cfg, 4, 5, 82);
  const auto theta = snapshot(model.controller_params());
  train_step(model, tiny_batch(), OptimizerConfig::from(cfg));
  CHECK(snapshot(model.controller_params()) == theta);
}

TEST_CASE("fse wiring: widths and parameter counts") {
  ExperimentConfig desk = tiny_config(Mode::Fse);
  Model model(desk, 4, 5, 83);
  CHECK(model.fse_user_table()->cols() == 6); // 2 + 4
  CHECK(model.fse_user_table()->size() + model.fse_item_table()->size() ==
        (4 + 5) * 6);

  ExperimentConfig fid = make_preset(Preset::Fidelity);
  fid.mode = Mode::Fse;
  Model big(fid, 3, 2, 84);
  CHECK(big.fse_user_table()->cols() == 146);
  CHECK(big.fse_user_table()->size() + big.fse_item_table()->size() ==
        (3 + 2) * 146);
  CHECK(big.dlrs().input_dim() == 2 * 146);
  CHECK(big.controller_params().empty());
}

TEST_CASE("fse records batch losses through the same step interface") {
  const auto cfg = tiny_config(Mode::Fse);
  Model model(cfg, 4, 5, 85);
  auto fwd = train_step(model, tiny_batch(), OptimizerConfig::from(cfg));
  CHECK(fwd.loss->values[0] > 0.0);
  CHECK(fwd.alpha == nullptr);
}

TEST_CASE("sam_step updates both parameter sets") {
  const auto cfg = tiny_config(Mode::Sam);
  Model model(cfg, 4, 5, 86);
  const auto w = snapshot(model.model_params());
  const auto theta = snapshot(model.controller_params());
  sam_step(model, tiny_batch(), OptimizerConfig::from(cfg));
  CHECK(snapshot(model.model_params()) != w);
  CHECK(snapshot(model.controller_params()) != theta);
}

TEST_CASE("sam with lr_theta 0 is step-equivalent to train_step") {
  const auto cfg = tiny_config(Mode::Sam);
  Model a(cfg, 4, 5, 87);
  Model b(cfg, 4, 5, 87);
  OptimizerConfig opt = OptimizerConfig::from(cfg);
  opt.lr_theta = 0.0;
  auto batch = tiny_batch();
  sam_step(a, batch, opt);
  train_step(b, batch, opt);
  const auto pa = snapshot(a.model_params());
  const auto pb = snapshot(b.model_params());
  CHECK(pa == pb);
  CHECK(snapshot(a.controller_params()) == snapshot(b.controller_params()));
}

TEST_CASE("sam controller gradient is the training-loss gradient") {
  const auto cfg = tiny_config(Mode::Sam);
  Model model(cfg, 4, 5, 88);
  auto batch = tiny_batch();

  auto build = [&](Tape& t) {
    return model.forward_loss(t, batch, BnMode::Batch).loss;
  };
  {
    Tape t;
    t.backward(build(t));
  }
  auto theta = model.controller_params();
  auto res = gradcheck::compare(
      [&] {
        Tape t;
        return build(t)->values[0];
      },
      theta, gradcheck::grads_of(theta));
  CHECK(res.max_rel_err < 1e-4);
  zero_grads(model.all_params());
}

TEST_CASE("darts mode trains per-entity weights and never builds features") {
  const auto cfg = tiny_config(Mode::DartsWeights);
  Model model(cfg, 4, 5, 89);
  OptimizerConfig opt = OptimizerConfig::from(cfg);

  const auto logits_before = snapshot(model.controller_params());
  controller_step(model, other_batch(), tiny_batch(), opt);
  CHECK(snapshot(model.controller_params()) != logits_before);

  train_step(model, tiny_batch(), opt);
  CHECK(model.features_built() == 0);
  CHECK(model.user_controller() == nullptr);
}

TEST_CASE("controller_step is rejected in sam/fse modes") {
  const auto cfg = tiny_config(Mode::Sam);
  Model model(cfg, 4, 5, 90);
  CHECK_THROWS_AS(
      controller_step(model, other_batch(), tiny_batch(), OptimizerConfig::from(cfg)),
      ContractError);
}
