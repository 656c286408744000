#include "autoemb/kernels.hpp"

#include <cmath>
#include <cstring>

namespace autoemb::kernels {

namespace {
Backend g_backend = Backend::OpenMP;

// Below this many multiply-adds the OpenMP variants skip the parallel region.
constexpr std::size_t kParallelCutoff = 8192;
} // namespace

Backend backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

namespace serial {

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::memset(ci, 0, n * sizeof(double));
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      if (accumulate) ci[j] += acc; else ci[j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    if (!accumulate) std::memset(ci, 0, n * sizeof(double));
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a[l * m + i];
      const double* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void tanh_forward(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_backward(const double* y, const double* dy, double* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += (1.0 - y[i] * y[i]) * dy[i];
}

void column_mean_var(const double* x, std::size_t rows, std::size_t cols,
                     double* mean, double* var) {
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += x[i * cols + j];
    const double mu = s / static_cast<double>(rows);
    double v = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = x[i * cols + j] - mu;
      v += d * d;
    }
    mean[j] = mu;
    var[j] = v / static_cast<double>(rows);
  }
}

} // namespace serial

namespace openmp {

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const bool big = m * k * n >= kParallelCutoff;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* ci = c + i * n;
    if (!accumulate) std::memset(ci, 0, n * sizeof(double));
    const double* ai = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = ai[l];
      const double* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const bool big = m * k * n >= kParallelCutoff;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
      if (accumulate) ci[j] += acc; else ci[j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const bool big = m * k * n >= kParallelCutoff;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* ci = c + i * n;
    if (!accumulate) std::memset(ci, 0, n * sizeof(double));
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a[l * m + i];
      const double* bl = b + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
}

void tanh_forward(const double* x, double* y, std::size_t n) {
#pragma omp parallel for schedule(static) if (n >= kParallelCutoff)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = std::tanh(x[i]);
}

void tanh_backward(const double* y, const double* dy, double* dx, std::size_t n) {
#pragma omp parallel for schedule(static) if (n >= kParallelCutoff)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    dx[i] += (1.0 - y[i] * y[i]) * dy[i];
}

void column_mean_var(const double* x, std::size_t rows, std::size_t cols,
                     double* mean, double* var) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParallelCutoff)
  for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(cols); ++jj) {
    const std::size_t j = static_cast<std::size_t>(jj);
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += x[i * cols + j];
    const double mu = s / static_cast<double>(rows);
    double v = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = x[i * cols + j] - mu;
      v += d * d;
    }
    mean[j] = mu;
    var[j] = v / static_cast<double>(rows);
  }
}

} // namespace openmp

#define AUTOEMB_DISPATCH(fn, ...)                         \
  do {                                                    \
    if (g_backend == Backend::Serial)                     \
      serial::fn(__VA_ARGS__);                            \
    else                                                  \
      openmp::fn(__VA_ARGS__);                            \
  } while (0)

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  AUTOEMB_DISPATCH(matmul_nn, a, b, c, m, k, n, accumulate);
}
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  AUTOEMB_DISPATCH(matmul_nt, a, b, c, m, k, n, accumulate);
}
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  AUTOEMB_DISPATCH(matmul_tn, a, b, c, m, k, n, accumulate);
}
void tanh_forward(const double* x, double* y, std::size_t n) {
  AUTOEMB_DISPATCH(tanh_forward, x, y, n);
}
void tanh_backward(const double* y, const double* dy, double* dx, std::size_t n) {
  AUTOEMB_DISPATCH(tanh_backward, y, dy, dx, n);
}
void column_mean_var(const double* x, std::size_t rows, std::size_t cols,
                     double* mean, double* var) {
  AUTOEMB_DISPATCH(column_mean_var, x, rows, cols, mean, var);
}

#undef AUTOEMB_DISPATCH

} // namespace autoemb::kernels
