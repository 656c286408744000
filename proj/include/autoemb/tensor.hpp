#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace autoemb {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense 64-bit float tensor. Doubles as a node payload on the Tape: grad is
// allocated lazily during backward and has the same length as values.
class Tensor {
 public:
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad; // empty until a gradient is accumulated
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shp, bool req_grad = false);

  static TensorPtr make(std::vector<std::size_t> shp, bool req_grad = false);
  static TensorPtr scalar(double v, bool req_grad = false);
  static TensorPtr from(std::vector<std::size_t> shp, std::vector<double> vals,
                        bool req_grad = false);

  std::size_t size() const { return values.size(); }
  bool is_scalar() const { return values.size() == 1; }

  // Rank-2 accessors; a rank-1 tensor counts as a single row.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();      // allocate zero-filled grad buffer if missing
  void zero_grad();        // drop accumulated gradients (keeps buffer)
  std::string shape_str() const;

  // Throws ContractError if any value is NaN or infinite.
  void check_finite(const char* what) const;
};

// When enabled, ops validate their outputs for NaN/Inf. Off by default.
bool debug_checks_enabled();
void set_debug_checks(bool enabled);

std::size_t shape_product(const std::vector<std::size_t>& shape);

} // namespace autoemb
