#include "autoemb/tape.hpp"

#include <algorithm>
#include <cmath>

#include "autoemb/error.hpp"
#include "autoemb/kernels.hpp"

namespace autoemb {

namespace {

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
  if (a->shape != b->shape)
    throw ShapeError(std::string(op) + ": shape mismatch " + a->shape_str() +
                     " vs " + b->shape_str());
}

bool any_requires_grad(std::initializer_list<const TensorPtr*> ts) {
  for (const TensorPtr* t : ts)
    if ((*t)->requires_grad) return true;
  return false;
}

} // namespace

TensorPtr Tape::record(TensorPtr out, std::function<void()> back, const char* what) {
  if (debug_checks_enabled()) out->check_finite(what);
  if (out->requires_grad) nodes_.push_back({out, std::move(back)});
  return out;
}

void Tape::clear() { nodes_.clear(); }

void Tape::backward(const TensorPtr& loss) {
  if (!loss->is_scalar())
    throw ContractError("backward requires a scalar loss, got shape " +
                        loss->shape_str());
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->out->has_grad()) continue; // no gradient reached this node
    it->back();
  }
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  if (a->cols() != b->rows())
    throw ShapeError("matmul: inner dimensions disagree, " + a->shape_str() +
                     " vs " + b->shape_str());
  const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
  auto out = Tensor::make({m, n}, any_requires_grad({&a, &b}));
  kernels::matmul_nn(a->values.data(), b->values.data(), out->values.data(),
                     m, k, n, false);
  return record(out, [a, b, out, m, k, n] {
    if (a->requires_grad) {
      a->ensure_grad();
      kernels::matmul_nt(out->grad.data(), b->values.data(), a->grad.data(),
                         m, n, k, true);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      kernels::matmul_tn(a->values.data(), out->grad.data(), b->grad.data(),
                         k, m, n, true);
    }
  }, "matmul");
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "add");
  auto out = Tensor::make(a->shape, any_requires_grad({&a, &b}));
  for (std::size_t i = 0; i < out->size(); ++i)
    out->values[i] = a->values[i] + b->values[i];
  return record(out, [a, b, out] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i) b->grad[i] += out->grad[i];
    }
  }, "add");
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "sub");
  auto out = Tensor::make(a->shape, any_requires_grad({&a, &b}));
  for (std::size_t i = 0; i < out->size(); ++i)
    out->values[i] = a->values[i] - b->values[i];
  return record(out, [a, b, out] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i) a->grad[i] += out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i) b->grad[i] -= out->grad[i];
    }
  }, "sub");
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  require_same_shape(a, b, "mul");
  auto out = Tensor::make(a->shape, any_requires_grad({&a, &b}));
  for (std::size_t i = 0; i < out->size(); ++i)
    out->values[i] = a->values[i] * b->values[i];
  return record(out, [a, b, out] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i)
        a->grad[i] += out->grad[i] * b->values[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i)
        b->grad[i] += out->grad[i] * a->values[i];
    }
  }, "mul");
}

TensorPtr Tape::scale(const TensorPtr& a, double s) {
  auto out = Tensor::make(a->shape, a->requires_grad);
  for (std::size_t i = 0; i < out->size(); ++i) out->values[i] = s * a->values[i];
  return record(out, [a, out, s] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) a->grad[i] += s * out->grad[i];
  }, "scale");
}

TensorPtr Tape::add_rowvec(const TensorPtr& x, const TensorPtr& bias) {
  const std::size_t rows = x->rows(), cols = x->cols();
  if (bias->size() != cols)
    throw ShapeError("add_rowvec: bias " + bias->shape_str() +
                     " does not match row width of " + x->shape_str());
  auto out = Tensor::make(x->shape, any_requires_grad({&x, &bias}));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out->values[i * cols + j] = x->values[i * cols + j] + bias->values[j];
  return record(out, [x, bias, out, rows, cols] {
    if (x->requires_grad) {
      x->ensure_grad();
      for (std::size_t i = 0; i < out->size(); ++i) x->grad[i] += out->grad[i];
    }
    if (bias->requires_grad) {
      bias->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
          bias->grad[j] += out->grad[i * cols + j];
    }
  }, "add_rowvec");
}

TensorPtr Tape::mul_rowvec(const TensorPtr& x, const std::vector<double>& col_scale) {
  const std::size_t rows = x->rows(), cols = x->cols();
  if (col_scale.size() != cols)
    throw ShapeError("mul_rowvec: scale length " + std::to_string(col_scale.size()) +
                     " does not match row width of " + x->shape_str());
  auto out = Tensor::make(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out->values[i * cols + j] = x->values[i * cols + j] * col_scale[j];
  return record(out, [x, out, col_scale, rows, cols] {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        x->grad[i * cols + j] += out->grad[i * cols + j] * col_scale[j];
  }, "mul_rowvec");
}

TensorPtr Tape::tanh(const TensorPtr& a) {
  auto out = Tensor::make(a->shape, a->requires_grad);
  kernels::tanh_forward(a->values.data(), out->values.data(), a->size());
  return record(out, [a, out] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    kernels::tanh_backward(out->values.data(), out->grad.data(), a->grad.data(),
                           a->size());
  }, "tanh");
}

TensorPtr Tape::sigmoid(const TensorPtr& a) {
  auto out = Tensor::make(a->shape, a->requires_grad);
  for (std::size_t i = 0; i < a->size(); ++i) {
    const double x = a->values[i];
    out->values[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                              : std::exp(x) / (1.0 + std::exp(x));
  }
  return record(out, [a, out] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < a->size(); ++i) {
      const double y = out->values[i];
      a->grad[i] += out->grad[i] * y * (1.0 - y);
    }
  }, "sigmoid");
}

TensorPtr Tape::softmax(const TensorPtr& a) {
  const std::size_t rows = a->rows(), cols = a->cols();
  if (cols < 1) throw ShapeError("softmax: empty input");
  auto out = Tensor::make(a->shape, a->requires_grad);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* x = a->values.data() + i * cols;
    double* y = out->values.data() + i * cols;
    const double mx = *std::max_element(x, x + cols);
    double denom = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - mx);
      denom += y[j];
    }
    for (std::size_t j = 0; j < cols; ++j) y[j] /= denom;
  }
  return record(out, [a, out, rows, cols] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i) {
      const double* y = out->values.data() + i * cols;
      const double* dy = out->grad.data() + i * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += dy[j] * y[j];
      double* dx = a->grad.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) dx[j] += y[j] * (dy[j] - dot);
    }
  }, "softmax");
}

TensorPtr Tape::batchnorm(const TensorPtr& x, double eps,
                          std::vector<double>* mean_out,
                          std::vector<double>* var_out) {
  if (eps <= 0.0) throw ContractError("batchnorm: eps must be positive");
  const std::size_t rows = x->rows(), cols = x->cols();
  if (rows < 1) throw ShapeError("batchnorm: batch must be non-empty");
  std::vector<double> mean(cols), var(cols);
  kernels::column_mean_var(x->values.data(), rows, cols, mean.data(), var.data());
  std::vector<double> inv(cols);
  for (std::size_t j = 0; j < cols; ++j) inv[j] = 1.0 / std::sqrt(var[j] + eps);
  auto out = Tensor::make(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out->values[i * cols + j] = (x->values[i * cols + j] - mean[j]) * inv[j];
  if (mean_out) *mean_out = mean;
  if (var_out) *var_out = var;
  return record(out, [x, out, inv = std::move(inv), rows, cols] {
    if (!x->requires_grad) return;
    x->ensure_grad();
    const double bsz = static_cast<double>(rows);
    // Differentiates through the mini-batch mean and biased variance:
    // dx = inv/B * (B*dy - sum(dy) - y * sum(dy*y)) per column.
    for (std::size_t j = 0; j < cols; ++j) {
      double sum_dy = 0.0, sum_dy_y = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        sum_dy += out->grad[i * cols + j];
        sum_dy_y += out->grad[i * cols + j] * out->values[i * cols + j];
      }
      for (std::size_t i = 0; i < rows; ++i) {
        const double dy = out->grad[i * cols + j];
        const double y = out->values[i * cols + j];
        x->grad[i * cols + j] += inv[j] / bsz * (bsz * dy - sum_dy - y * sum_dy_y);
      }
    }
  }, "batchnorm");
}

TensorPtr Tape::normalize_fixed(const TensorPtr& x, const std::vector<double>& mean,
                                const std::vector<double>& var, double eps) {
  const std::size_t rows = x->rows(), cols = x->cols();
  if (mean.size() != cols || var.size() != cols)
    throw ShapeError("normalize_fixed: statistics length does not match " +
                     x->shape_str());
  std::vector<double> inv(cols);
  for (std::size_t j = 0; j < cols; ++j) inv[j] = 1.0 / std::sqrt(var[j] + eps);
  auto out = Tensor::make(x->shape, x->requires_grad);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out->values[i * cols + j] = (x->values[i * cols + j] - mean[j]) * inv[j];
  return record(out, [x, out, inv = std::move(inv), rows, cols] {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        x->grad[i * cols + j] += out->grad[i * cols + j] * inv[j];
  }, "normalize_fixed");
}

TensorPtr Tape::gather_rows(const TensorPtr& table,
                            const std::vector<std::uint32_t>& ids,
                            std::size_t col_lo, std::size_t col_hi) {
  const std::size_t cols = table->cols();
  if (col_lo >= col_hi || col_hi > cols)
    throw ShapeError("gather_rows: column slice [" + std::to_string(col_lo) +
                     ", " + std::to_string(col_hi) + ") out of " +
                     table->shape_str());
  const std::size_t width = col_hi - col_lo;
  for (std::uint32_t id : ids)
    if (id >= table->rows())
      throw ContractError("gather_rows: id " + std::to_string(id) +
                          " out of range (rows=" + std::to_string(table->rows()) + ")");
  auto out = Tensor::make({ids.size(), width}, table->requires_grad);
  for (std::size_t b = 0; b < ids.size(); ++b) {
    const double* src = table->values.data() + ids[b] * cols + col_lo;
    std::copy(src, src + width, out->values.data() + b * width);
  }
  return record(out, [table, out, ids, col_lo, cols, width] {
    if (!table->requires_grad) return;
    table->ensure_grad();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      double* dst = table->grad.data() + ids[b] * cols + col_lo;
      const double* src = out->grad.data() + b * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
    }
  }, "gather_rows");
}

TensorPtr Tape::concat_cols(const TensorPtr& a, const TensorPtr& b) {
  if (a->rows() != b->rows())
    throw ShapeError("concat_cols: row counts differ, " + a->shape_str() +
                     " vs " + b->shape_str());
  const std::size_t rows = a->rows(), ca = a->cols(), cb = b->cols();
  auto out = Tensor::make({rows, ca + cb}, any_requires_grad({&a, &b}));
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(a->values.begin() + i * ca, a->values.begin() + (i + 1) * ca,
              out->values.begin() + i * (ca + cb));
    std::copy(b->values.begin() + i * cb, b->values.begin() + (i + 1) * cb,
              out->values.begin() + i * (ca + cb) + ca);
  }
  return record(out, [a, b, out, rows, ca, cb] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < ca; ++j)
          a->grad[i * ca + j] += out->grad[i * (ca + cb) + j];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cb; ++j)
          b->grad[i * cb + j] += out->grad[i * (ca + cb) + ca + j];
    }
  }, "concat_cols");
}

TensorPtr Tape::mix(const TensorPtr& weights, const std::vector<TensorPtr>& candidates,
                    double s) {
  if (candidates.empty()) throw ContractError("mix: no candidates");
  const std::size_t n_spaces = candidates.size();
  const std::size_t rows = candidates[0]->rows(), cols = candidates[0]->cols();
  for (const auto& c : candidates)
    require_same_shape(candidates[0], c, "mix");
  const bool per_row = weights->shape.size() == 2;
  if (per_row) {
    if (weights->rows() != rows || weights->cols() != n_spaces)
      throw ShapeError("mix: weights " + weights->shape_str() + " do not match " +
                       std::to_string(rows) + " rows x " +
                       std::to_string(n_spaces) + " candidates");
  } else if (weights->size() != n_spaces) {
    throw ShapeError("mix: expected " + std::to_string(n_spaces) +
                     " weights, got " + weights->shape_str());
  }

  bool req = weights->requires_grad;
  for (const auto& c : candidates) req = req || c->requires_grad;
  auto out = Tensor::make({rows, cols}, req);
  for (std::size_t b = 0; b < rows; ++b) {
    double* o = out->values.data() + b * cols;
    for (std::size_t n = 0; n < n_spaces; ++n) {
      const double w = s * (per_row ? weights->values[b * n_spaces + n]
                                    : weights->values[n]);
      const double* c = candidates[n]->values.data() + b * cols;
      for (std::size_t j = 0; j < cols; ++j) o[j] += w * c[j];
    }
  }
  return record(out, [weights, candidates, out, s, per_row, rows, cols, n_spaces] {
    for (std::size_t n = 0; n < n_spaces; ++n) {
      const auto& cand = candidates[n];
      if (cand->requires_grad) {
        cand->ensure_grad();
        for (std::size_t b = 0; b < rows; ++b) {
          const double w = s * (per_row ? weights->values[b * n_spaces + n]
                                        : weights->values[n]);
          const double* dout = out->grad.data() + b * cols;
          double* dc = cand->grad.data() + b * cols;
          for (std::size_t j = 0; j < cols; ++j) dc[j] += w * dout[j];
        }
      }
      if (weights->requires_grad) {
        weights->ensure_grad();
        for (std::size_t b = 0; b < rows; ++b) {
          const double* dout = out->grad.data() + b * cols;
          const double* c = cand->values.data() + b * cols;
          double acc = 0.0;
          for (std::size_t j = 0; j < cols; ++j) acc += dout[j] * c[j];
          if (per_row)
            weights->grad[b * n_spaces + n] += s * acc;
          else
            weights->grad[n] += s * acc;
        }
      }
    }
  }, "mix");
}

TensorPtr Tape::mse(const TensorPtr& pred, const TensorPtr& target) {
  require_same_shape(pred, target, "mse");
  const std::size_t n = pred->size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred->values[i] - target->values[i];
    acc += d * d;
  }
  auto out = Tensor::scalar(acc / static_cast<double>(n), pred->requires_grad);
  return record(out, [pred, target, out, n] {
    if (!pred->requires_grad) return;
    pred->ensure_grad();
    const double g = out->grad[0] * 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      pred->grad[i] += g * (pred->values[i] - target->values[i]);
  }, "mse");
}

TensorPtr Tape::cross_entropy(const TensorPtr& logits, const std::vector<int>& classes) {
  const std::size_t rows = logits->rows(), cols = logits->cols();
  if (classes.size() != rows)
    throw ShapeError("cross_entropy: " + std::to_string(classes.size()) +
                     " labels for " + std::to_string(rows) + " rows");
  for (int c : classes)
    if (c < 0 || static_cast<std::size_t>(c) >= cols)
      throw ContractError("cross_entropy: class index " + std::to_string(c) +
                          " outside [0, " + std::to_string(cols) + ")");
  // log-softmax per row; probabilities kept for the backward rule
  std::vector<double> probs(rows * cols);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* z = logits->values.data() + i * cols;
    const double mx = *std::max_element(z, z + cols);
    double denom = 0.0;
    for (std::size_t j = 0; j < cols; ++j) denom += std::exp(z[j] - mx);
    const double lse = mx + std::log(denom);
    loss += lse - z[classes[i]];
    for (std::size_t j = 0; j < cols; ++j)
      probs[i * cols + j] = std::exp(z[j] - lse);
  }
  auto out = Tensor::scalar(loss / static_cast<double>(rows), logits->requires_grad);
  return record(out, [logits, out, classes, probs = std::move(probs), rows, cols] {
    if (!logits->requires_grad) return;
    logits->ensure_grad();
    const double g = out->grad[0] / static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) {
        const double onehot = (static_cast<std::size_t>(classes[i]) == j) ? 1.0 : 0.0;
        logits->grad[i * cols + j] += g * (probs[i * cols + j] - onehot);
      }
  }, "cross_entropy");
}

TensorPtr Tape::sum(const TensorPtr& a) {
  double acc = 0.0;
  for (double v : a->values) acc += v;
  auto out = Tensor::scalar(acc, a->requires_grad);
  return record(out, [a, out] {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[0];
  }, "sum");
}

} // namespace autoemb
