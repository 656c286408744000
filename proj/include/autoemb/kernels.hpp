#pragma once

#include <cstddef>

// Dense inner-loop kernels behind the tensor ops. Every kernel exists twice:
// a serial reference in kernels::serial and an OpenMP version in
// kernels::openmp. Both use the same fixed per-element summation order
// (parallelism is only across independent output elements), so their results
// are bitwise identical for any thread count. The top-level functions
// dispatch on the active backend.
namespace autoemb::kernels {

enum class Backend { Serial, OpenMP };

Backend backend();
void set_backend(Backend b);

namespace serial {

// C[m x n] = A[m x k] * B[k x n]; accumulates into C when accumulate is set.
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);

// C[m x n] = A[m x k] * B[n x k]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);

// C[m x n] = A[k x m]^T * B[k x n]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);

void tanh_forward(const double* x, double* y, std::size_t n);

// dx += (1 - y^2) * dy, with y the forward output
void tanh_backward(const double* y, const double* dy, double* dx, std::size_t n);

// Per-column mean and biased variance (divide by rows) of x[rows x cols].
void column_mean_var(const double* x, std::size_t rows, std::size_t cols,
                     double* mean, double* var);

} // namespace serial

namespace openmp {

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void tanh_forward(const double* x, double* y, std::size_t n);
void tanh_backward(const double* y, const double* dy, double* dx, std::size_t n);
void column_mean_var(const double* x, std::size_t rows, std::size_t cols,
                     double* mean, double* var);

} // namespace openmp

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void tanh_forward(const double* x, double* y, std::size_t n);
void tanh_backward(const double* y, const double* dy, double* dx, std::size_t n);
void column_mean_var(const double* x, std::size_t rows, std::size_t cols,
                     double* mean, double* var);

} // namespace autoemb::kernels
