#pragma once

#include <cmath>

#include "autoemb/rng.hpp"
#include "autoemb/tensor.hpp"

namespace autoemb {

inline TensorPtr uniform_init(std::vector<std::size_t> shape, double lo, double hi,
                              Rng& rng) {
  auto t = Tensor::make(std::move(shape), true);
  for (double& v : t->values) v = rng.uniform(lo, hi);
  return t;
}

// Scaled-uniform init sized for tanh stacks.
inline TensorPtr xavier_init(std::vector<std::size_t> shape, std::size_t fan_in,
                             std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_init(std::move(shape), -bound, bound, rng);
}

inline TensorPtr zeros_param(std::vector<std::size_t> shape) {
  return Tensor::make(std::move(shape), true);
}

} // namespace autoemb
