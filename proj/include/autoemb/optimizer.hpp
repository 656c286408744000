#pragma once

#include "autoemb/model.hpp"
#include "autoemb/tape.hpp"

namespace autoemb {

struct OptimizerConfig {
  Mode mode = Mode::AutoEmb;
  double xi = 0.0;
  double lr_w = 0.01;
  double lr_theta = 0.001;
  bool second_order = false;

  static OptimizerConfig from(const ExperimentConfig& cfg) {
    return {cfg.mode, cfg.xi, cfg.lr_w, cfg.lr_theta, cfg.second_order};
  }
};

// p <- p - lr * grad(p), then gradients are zeroed. Every parameter must
// hold a gradient buffer.
void sgd_step(const std::vector<TensorPtr>& params, double lr);
void zero_grads(const std::vector<TensorPtr>& params);

// Abstract two-level objective: losses rebuilt on demand over the current
// parameter values, with the parameters split into the training-loss set W
// and the validation-trained set Theta.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;
  virtual TensorPtr train_loss(Tape& tape) = 0;
  virtual TensorPtr val_loss(Tape& tape) = 0;
  virtual std::vector<TensorPtr> model_params() = 0;      // W
  virtual std::vector<TensorPtr> controller_params() = 0; // Theta
};

// One descent step on Theta.
//
// xi = 0 (first order): Theta <- Theta - lr * d(L_val(W, Theta))/dTheta.
//
// xi > 0 (second order): the validation gradient is taken at the virtual
// point W' = W - xi * dW L_train(W, Theta), and the xi-weighted cross term
// is estimated by central finite differences over W with relative step
// r = 0.01 / ||dW' L_val||. W is restored bitwise before returning.
void bilevel_controller_step(BilevelProblem& problem, double xi, double lr_theta,
                             bool second_order);

// Model-level steps used by the streaming loop. All of them leave every
// gradient buffer zeroed on exit.

// Controller update from a validation batch (autoemb / darts modes).
void controller_step(Model& model, const BatchView& val_batch,
                     const BatchView& train_batch, const OptimizerConfig& cfg);

// One descent step of the model parameters W on the training batch; the
// controllers are frozen. Returns the forward result (its loss is the
// recorded batch loss).
Model::Forward train_step(Model& model, const BatchView& batch,
                          const OptimizerConfig& cfg);

// Joint update of W and Theta from the same training batch.
Model::Forward sam_step(Model& model, const BatchView& batch,
                        const OptimizerConfig& cfg);

} // namespace autoemb
