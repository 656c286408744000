#include "autoemb/dlrs.hpp"

#include <algorithm>
#include <cmath>

#include "autoemb/error.hpp"
#include "autoemb/init.hpp"

namespace autoemb {

DlrsModel::DlrsModel(std::size_t input_dim, std::vector<std::size_t> hidden_widths,
                     Task task, Rng& rng, std::size_t num_classes)
    : input_dim_(input_dim), task_(task) {
  output_dim_ = task == Task::Regression ? 1 : num_classes;
  std::size_t in = input_dim_;
  for (std::size_t width : hidden_widths) {
    hidden_w_.push_back(xavier_init({in, width}, in, width, rng));
    hidden_b_.push_back(zeros_param({width}));
    in = width;
  }
  out_w_ = xavier_init({in, output_dim_}, in, output_dim_, rng);
  out_b_ = zeros_param({output_dim_});
}

DlrsOutput DlrsModel::forward(Tape& tape, const TensorPtr& h0) const {
  if (h0->cols() != input_dim_)
    throw ContractError("dlrs input width " + std::to_string(h0->cols()) +
                        ", expected " + std::to_string(input_dim_));
  TensorPtr h = h0;
  for (std::size_t m = 0; m < hidden_w_.size(); ++m)
    h = tape.tanh(tape.add_rowvec(tape.matmul(h, hidden_w_[m]), hidden_b_[m]));
  DlrsOutput out;
  out.logits = tape.add_rowvec(tape.matmul(h, out_w_), out_b_);
  out.pred = task_ == Task::Regression ? tape.sigmoid(out.logits)
                                       : tape.softmax(out.logits);
  return out;
}

TensorPtr DlrsModel::loss(Tape& tape, const DlrsOutput& out,
                          const LabelBatch& labels) const {
  const std::size_t batch = out.logits->rows();
  if (task_ == Task::Regression) {
    if (labels.binary.size() != batch)
      throw ContractError("regression labels: got " +
                          std::to_string(labels.binary.size()) + " for batch " +
                          std::to_string(batch));
    auto target = Tensor::from({batch, 1}, labels.binary);
    return tape.mse(out.pred, target);
  }
  if (labels.classes.size() != batch)
    throw ContractError("classification labels: got " +
                        std::to_string(labels.classes.size()) + " for batch " +
                        std::to_string(batch));
  return tape.cross_entropy(out.logits, labels.classes);
}

std::vector<TensorPtr> DlrsModel::params() {
  std::vector<TensorPtr> p;
  for (std::size_t m = 0; m < hidden_w_.size(); ++m) {
    p.push_back(hidden_w_[m]);
    p.push_back(hidden_b_[m]);
  }
  p.push_back(out_w_);
  p.push_back(out_b_);
  return p;
}

double accuracy(Task task, const Tensor& pred, const LabelBatch& labels) {
  const std::size_t batch = pred.rows();
  if (batch == 0) return 0.0;
  std::size_t correct = 0;
  if (task == Task::Regression) {
    for (std::size_t i = 0; i < batch; ++i) {
      const int hat = pred.values[i] >= 0.5 ? 1 : 0;
      if (hat == static_cast<int>(labels.binary[i])) ++correct;
    }
  } else {
    const std::size_t cols = pred.cols();
    for (std::size_t i = 0; i < batch; ++i) {
      const double* row = pred.values.data() + i * cols;
      const std::size_t hat = static_cast<std::size_t>(
          std::max_element(row, row + cols) - row);
      if (hat == static_cast<std::size_t>(labels.classes[i])) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(batch);
}

std::vector<double> per_example_losses(Task task, const DlrsOutput& out,
                                       const LabelBatch& labels) {
  const std::size_t batch = out.logits->rows();
  std::vector<double> losses(batch);
  if (task == Task::Regression) {
    for (std::size_t i = 0; i < batch; ++i) {
      const double d = out.pred->values[i] - labels.binary[i];
      losses[i] = d * d;
    }
  } else {
    const std::size_t cols = out.logits->cols();
    for (std::size_t i = 0; i < batch; ++i) {
      const double* z = out.logits->values.data() + i * cols;
      const double mx = *std::max_element(z, z + cols);
      double denom = 0.0;
      for (std::size_t j = 0; j < cols; ++j) denom += std::exp(z[j] - mx);
      losses[i] = mx + std::log(denom) - z[labels.classes[i]];
    }
  }
  return losses;
}

} // namespace autoemb
