#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "autoemb/tensor.hpp"

namespace autoemb {

// Reverse-mode tape over dense tensors. Each op computes its forward result
// immediately and, when the output needs a gradient, records a closure with
// the local backward rule. Nodes are appended in execution order, so the
// recorded list is already topologically sorted and backward() is a single
// reverse sweep that visits each node exactly once. Gradients accumulate
// additively across multiple uses of a tensor.
//
// The tape is rebuilt per mini-batch and owned by one execution context at a
// time; parameter tensors outlive it.
class Tape {
 public:
  // C = A * B with A [m x k], B [k x n].
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

  // Elementwise; shapes must match.
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& a, double s);

  // x [B x d] plus a length-d bias broadcast over rows.
  TensorPtr add_rowvec(const TensorPtr& x, const TensorPtr& bias);

  // x [B x d] scaled per column by a fixed (non-learned) vector.
  TensorPtr mul_rowvec(const TensorPtr& x, const std::vector<double>& col_scale);

  TensorPtr tanh(const TensorPtr& a);
  TensorPtr sigmoid(const TensorPtr& a);

  // Row-wise softmax; rank-1 input is treated as a single row. Stable
  // (max-subtracted); outputs sum to 1 per row.
  TensorPtr softmax(const TensorPtr& a);

  // Normalizes each column of x [B x d] by mini-batch mean and biased
  // variance. Optionally reports the batch statistics.
  TensorPtr batchnorm(const TensorPtr& x, double eps,
                      std::vector<double>* mean_out = nullptr,
                      std::vector<double>* var_out = nullptr);

  // Normalizes by fixed per-column statistics (inference path).
  TensorPtr normalize_fixed(const TensorPtr& x, const std::vector<double>& mean,
                            const std::vector<double>& var, double eps);

  // out[b, :] = table[ids[b], col_lo:col_hi). Gradients flow only into the
  // gathered rows.
  TensorPtr gather_rows(const TensorPtr& table, const std::vector<std::uint32_t>& ids,
                        std::size_t col_lo, std::size_t col_hi);

  TensorPtr concat_cols(const TensorPtr& a, const TensorPtr& b);

  // out[b,j] = s * sum_n w(b,n) * candidates[n][b,j]. Weights are either
  // [N] (broadcast over the batch) or [B x N].
  TensorPtr mix(const TensorPtr& weights, const std::vector<TensorPtr>& candidates,
                double s);

  // Mean-squared error over all elements; target carries no gradient.
  TensorPtr mse(const TensorPtr& pred, const TensorPtr& target);

  // Mean negative log-likelihood with log-softmax applied internally.
  // classes[i] must lie in [0, C).
  TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& classes);

  TensorPtr sum(const TensorPtr& a);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must be
  // scalar and the tape intact (no clear() since the op was recorded).
  void backward(const TensorPtr& loss);

  void clear();
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    TensorPtr out;
    std::function<void()> back;
  };
  std::vector<Node> nodes_;

  TensorPtr record(TensorPtr out, std::function<void()> back, const char* what);
};

} // namespace autoemb
