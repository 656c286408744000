#include "autoemb/optimizer.hpp"

#include <cmath>

#include "autoemb/error.hpp"

namespace autoemb {

void sgd_step(const std::vector<TensorPtr>& params, double lr) {
  for (const auto& p : params)
    if (!p->has_grad())
      throw ContractError("sgd_step: parameter " + p->shape_str() +
                          " has no gradient");
  for (const auto& p : params) {
    for (std::size_t i = 0; i < p->size(); ++i)
      p->values[i] -= lr * p->grad[i];
    p->zero_grad();
  }
}

void zero_grads(const std::vector<TensorPtr>& params) {
  for (const auto& p : params) p->zero_grad();
}

namespace {

std::vector<std::vector<double>> copy_values(const std::vector<TensorPtr>& ts) {
  std::vector<std::vector<double>> out;
  out.reserve(ts.size());
  for (const auto& t : ts) out.push_back(t->values);
  return out;
}

void restore_values(const std::vector<TensorPtr>& ts,
                    const std::vector<std::vector<double>>& saved) {
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i]->values = saved[i];
}

std::vector<std::vector<double>> take_grads(const std::vector<TensorPtr>& ts) {
  std::vector<std::vector<double>> out;
  out.reserve(ts.size());
  for (const auto& t : ts) {
    t->ensure_grad();
    out.push_back(t->grad);
    t->zero_grad();
  }
  return out;
}

// Gradient of Theta on a freshly built loss; every other gradient is
// discarded afterward.
std::vector<std::vector<double>> theta_grad_of(BilevelProblem& problem,
                                               bool on_train,
                                               const std::vector<TensorPtr>& w,
                                               const std::vector<TensorPtr>& theta) {
  Tape tape;
  auto loss = on_train ? problem.train_loss(tape) : problem.val_loss(tape);
  tape.backward(loss);
  auto g = take_grads(theta);
  zero_grads(w);
  return g;
}

} // namespace

void bilevel_controller_step(BilevelProblem& problem, double xi, double lr_theta,
                             bool second_order) {
  if (second_order && xi == 0.0)
    throw ConfigError("second-order controller step requires xi > 0");
  auto theta = problem.controller_params();
  if (theta.empty()) return;
  auto w = problem.model_params();

  if (!second_order) {
    Tape tape;
    auto loss = problem.val_loss(tape);
    tape.backward(loss);
    sgd_step(theta, lr_theta);
    zero_grads(w);
    return;
  }

  const auto w_saved = copy_values(w);

  // Virtual step W' = W - xi * dW L_train(W, Theta).
  std::vector<std::vector<double>> g_train;
  {
    Tape tape;
    auto loss = problem.train_loss(tape);
    tape.backward(loss);
    g_train = take_grads(w);
    zero_grads(theta);
  }
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < w[i]->size(); ++j)
      w[i]->values[j] -= xi * g_train[i][j];

  // Validation gradients at (W', Theta).
  std::vector<std::vector<double>> d_theta, v;
  {
    Tape tape;
    auto loss = problem.val_loss(tape);
    tape.backward(loss);
    d_theta = take_grads(theta);
    v = take_grads(w);
  }
  restore_values(w, w_saved);

  double v_norm_sq = 0.0;
  for (const auto& g : v)
    for (double x : g) v_norm_sq += x * x;
  const double v_norm = std::sqrt(v_norm_sq);

  if (v_norm > 0.0) {
    const double r = 0.01 / v_norm;
    // dTheta( L_train(W + r v) ) and dTheta( L_train(W - r v) )
    for (std::size_t i = 0; i < w.size(); ++i)
      for (std::size_t j = 0; j < w[i]->size(); ++j)
        w[i]->values[j] = w_saved[i][j] + r * v[i][j];
    auto g_plus = theta_grad_of(problem, true, w, theta);
    for (std::size_t i = 0; i < w.size(); ++i)
      for (std::size_t j = 0; j < w[i]->size(); ++j)
        w[i]->values[j] = w_saved[i][j] - r * v[i][j];
    auto g_minus = theta_grad_of(problem, true, w, theta);
    restore_values(w, w_saved);

    const double scale = xi / (2.0 * r);
    for (std::size_t i = 0; i < theta.size(); ++i)
      for (std::size_t j = 0; j < theta[i]->size(); ++j)
        d_theta[i][j] -= scale * (g_plus[i][j] - g_minus[i][j]);
  }

  for (std::size_t i = 0; i < theta.size(); ++i) {
    for (std::size_t j = 0; j < theta[i]->size(); ++j)
      theta[i]->values[j] -= lr_theta * d_theta[i][j];
    theta[i]->zero_grad();
  }
}

namespace {

// Binds a model and a pair of batches to the abstract bilevel interface.
// Both losses are evaluated with mini-batch statistics but without touching
// the running averages, so a controller step mutates Theta and nothing else.
class ModelProblem final : public BilevelProblem {
 public:
  ModelProblem(Model& model, const BatchView& val, const BatchView& train)
      : model_(model), val_(val), train_(train) {}

  TensorPtr train_loss(Tape& tape) override {
    return model_.forward_loss(tape, train_, BnMode::Batch).loss;
  }
  TensorPtr val_loss(Tape& tape) override {
    return model_.forward_loss(tape, val_, BnMode::Batch).loss;
  }
  std::vector<TensorPtr> model_params() override { return model_.model_params(); }
  std::vector<TensorPtr> controller_params() override {
    return model_.controller_params();
  }

 private:
  Model& model_;
  const BatchView& val_;
  const BatchView& train_;
};

} // namespace

void controller_step(Model& model, const BatchView& val_batch,
                     const BatchView& train_batch, const OptimizerConfig& cfg) {
  if (model.mode() != Mode::AutoEmb && model.mode() != Mode::DartsWeights)
    throw ContractError("controller_step is only valid in autoemb/darts modes");
  ModelProblem problem(model, val_batch, train_batch);
  bilevel_controller_step(problem, cfg.xi, cfg.lr_theta, cfg.second_order);
}

Model::Forward train_step(Model& model, const BatchView& batch,
                          const OptimizerConfig& cfg) {
  Tape tape;
  auto fwd = model.forward_loss(tape, batch, BnMode::Train);
  tape.backward(fwd.loss);
  sgd_step(model.model_params(), cfg.lr_w);
  zero_grads(model.controller_params());
  model.update_context(batch, fwd);
  return fwd;
}

Model::Forward sam_step(Model& model, const BatchView& batch,
                        const OptimizerConfig& cfg) {
  Tape tape;
  auto fwd = model.forward_loss(tape, batch, BnMode::Train);
  tape.backward(fwd.loss);
  sgd_step(model.model_params(), cfg.lr_w);
  sgd_step(model.controller_params(), cfg.lr_theta);
  model.update_context(batch, fwd);
  return fwd;
}

} // namespace autoemb
