// Compares the serial reference kernels against the OpenMP versions and
// verifies on the way that both backends produce bitwise-identical results.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include <omp.h>

#include "autoemb/kernels.hpp"
#include "autoemb/rng.hpp"

using namespace autoemb;
using clock_type = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn(); // warm up
  const auto t0 = clock_type::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = clock_type::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

std::vector<double> random_matrix(std::size_t n, Rng& rng) {
  std::vector<double> m(n);
  for (double& v : m) v = rng.uniform(-1.0, 1.0);
  return m;
}

struct Case {
  std::size_t m, k, n;
};

int run(bool quick) {
  Rng rng(2024);
  const std::vector<Case> cases = quick
      ? std::vector<Case>{{128, 64, 128}, {500, 146, 128}}
      : std::vector<Case>{{128, 64, 128}, {500, 38, 512}, {500, 146, 128},
                          {500, 512, 512}, {1024, 512, 512}};
  const int reps = quick ? 3 : 10;

  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-22s %12s %12s %9s\n", "kernel", "serial s", "openmp s", "speedup");

  bool all_equal = true;
  for (const Case& c : cases) {
    const auto a = random_matrix(c.m * c.k, rng);
    const auto b = random_matrix(c.k * c.n, rng);
    std::vector<double> out_serial(c.m * c.n), out_openmp(c.m * c.n);

    const double ts = time_of([&] {
      kernels::serial::matmul_nn(a.data(), b.data(), out_serial.data(),
                                 c.m, c.k, c.n, false);
    }, reps);
    const double tp = time_of([&] {
      kernels::openmp::matmul_nn(a.data(), b.data(), out_openmp.data(),
                                 c.m, c.k, c.n, false);
    }, reps);
    const bool equal = std::memcmp(out_serial.data(), out_openmp.data(),
                                   out_serial.size() * sizeof(double)) == 0;
    all_equal = all_equal && equal;
    char name[64];
    std::snprintf(name, sizeof name, "matmul_nn %zux%zux%zu", c.m, c.k, c.n);
    std::printf("%-22s %12.6f %12.6f %8.2fx%s\n", name, ts, tp, ts / tp,
                equal ? "" : "  MISMATCH");
  }

  {
    const std::size_t n = 1 << 20;
    const auto x = random_matrix(n, rng);
    std::vector<double> ys(n), yp(n);
    const double ts = time_of([&] {
      kernels::serial::tanh_forward(x.data(), ys.data(), n);
    }, reps);
    const double tp = time_of([&] {
      kernels::openmp::tanh_forward(x.data(), yp.data(), n);
    }, reps);
    const bool equal = std::memcmp(ys.data(), yp.data(), n * sizeof(double)) == 0;
    all_equal = all_equal && equal;
    std::printf("%-22s %12.6f %12.6f %8.2fx%s\n", "tanh 1M", ts, tp, ts / tp,
                equal ? "" : "  MISMATCH");
  }

  {
    const std::size_t rows = 2048, cols = 512;
    const auto x = random_matrix(rows * cols, rng);
    std::vector<double> ms(cols), vs(cols), mp(cols), vp(cols);
    const double ts = time_of([&] {
      kernels::serial::column_mean_var(x.data(), rows, cols, ms.data(), vs.data());
    }, reps);
    const double tp = time_of([&] {
      kernels::openmp::column_mean_var(x.data(), rows, cols, mp.data(), vp.data());
    }, reps);
    const bool equal =
        std::memcmp(ms.data(), mp.data(), cols * sizeof(double)) == 0 &&
        std::memcmp(vs.data(), vp.data(), cols * sizeof(double)) == 0;
    all_equal = all_equal && equal;
    std::printf("%-22s %12.6f %12.6f %8.2fx%s\n", "column stats 2048x512", ts, tp,
                ts / tp, equal ? "" : "  MISMATCH");
  }

  if (!all_equal) {
    std::printf("FAIL: backends disagree\n");
    return 1;
  }
  std::printf("backends bitwise identical\n");
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--quick") quick = true;
  return run(quick);
}
