#include "autoemb/tensor.hpp"

#include <cmath>

#include "autoemb/error.hpp"

namespace autoemb {

namespace {
bool g_debug_checks = false;
}

bool debug_checks_enabled() { return g_debug_checks; }
void set_debug_checks(bool enabled) { g_debug_checks = enabled; }

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shp, bool req_grad)
    : shape(std::move(shp)), values(shape_product(shape), 0.0),
      requires_grad(req_grad) {}

TensorPtr Tensor::make(std::vector<std::size_t> shp, bool req_grad) {
  return std::make_shared<Tensor>(std::move(shp), req_grad);
}

TensorPtr Tensor::scalar(double v, bool req_grad) {
  auto t = make({1}, req_grad);
  t->values[0] = v;
  return t;
}

TensorPtr Tensor::from(std::vector<std::size_t> shp, std::vector<double> vals,
                       bool req_grad) {
  if (shape_product(shp) != vals.size())
    throw ShapeError("tensor value count " + std::to_string(vals.size()) +
                     " does not match shape product " +
                     std::to_string(shape_product(shp)));
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shp);
  t->values = std::move(vals);
  t->requires_grad = req_grad;
  return t;
}

std::size_t Tensor::rows() const { return shape.size() >= 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const {
  if (shape.empty()) return 1;
  return shape.size() >= 2 ? shape[1] : shape[0];
}

void Tensor::ensure_grad() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) grad.assign(values.size(), 0.0);
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void Tensor::check_finite(const char* what) const {
  for (double v : values) {
    if (!std::isfinite(v))
      throw ContractError(std::string("non-finite value in ") + what);
  }
}

} // namespace autoemb
