#pragma once

#include <vector>

#include "autoemb/rng.hpp"
#include "autoemb/tape.hpp"
#include "autoemb/tensor.hpp"

namespace autoemb {

enum class Task { Regression, Classification };

// Labels for one mini-batch; which side is populated depends on the task.
struct LabelBatch {
  std::vector<double> binary;  // regression targets in {0, 1}
  std::vector<int> classes;    // classification targets in [0, num_classes)
};

struct DlrsOutput {
  TensorPtr logits; // [B x 1] or [B x C]
  TensorPtr pred;   // sigmoid(logits) or row softmax(logits)
};

// Prediction head: M fully-connected tanh layers over the concatenated
// user/item representations, then a task-specific output layer (sigmoid for
// regression in (0,1), softmax over the rating classes otherwise).
class DlrsModel {
 public:
  DlrsModel(std::size_t input_dim, std::vector<std::size_t> hidden_widths,
            Task task, Rng& rng, std::size_t num_classes = 5);

  DlrsOutput forward(Tape& tape, const TensorPtr& h0) const;

  // MSE between prediction and binary labels, or cross-entropy on logits.
  TensorPtr loss(Tape& tape, const DlrsOutput& out, const LabelBatch& labels) const;

  std::vector<TensorPtr> params();

  Task task() const { return task_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }

 private:
  std::size_t input_dim_, output_dim_;
  Task task_;
  std::vector<TensorPtr> hidden_w_, hidden_b_;
  TensorPtr out_w_, out_b_;
};

// Fraction of correct predictions. Regression thresholds at 0.5 (a value of
// exactly 0.5 counts as label 1); classification takes the row argmax.
double accuracy(Task task, const Tensor& pred, const LabelBatch& labels);

// Per-example losses from forward values (no gradient involvement):
// squared error or negative log-likelihood.
std::vector<double> per_example_losses(Task task, const DlrsOutput& out,
                                       const LabelBatch& labels);

} // namespace autoemb
