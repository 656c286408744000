#include <cstring>
#include <vector>

#include <doctest.h>

#include "autoemb/kernels.hpp"
#include "autoemb/rng.hpp"

using namespace autoemb;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("serial and openmp matmul variants are bitwise identical") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + rng.index(40);
    const std::size_t k = 1 + rng.index(40);
    const std::size_t n = 1 + rng.index(40);
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    const auto bt = random_vec(n * k, rng);
    const auto at = random_vec(k * m, rng);
    const bool accumulate = trial % 2 == 0;
    auto seed_out = random_vec(m * n, rng);

    auto s = seed_out, p = seed_out;
    kernels::serial::matmul_nn(a.data(), b.data(), s.data(), m, k, n, accumulate);
    kernels::openmp::matmul_nn(a.data(), b.data(), p.data(), m, k, n, accumulate);
    CHECK(bitwise_equal(s, p));

    s = seed_out; p = seed_out;
    kernels::serial::matmul_nt(a.data(), bt.data(), s.data(), m, k, n, accumulate);
    kernels::openmp::matmul_nt(a.data(), bt.data(), p.data(), m, k, n, accumulate);
    CHECK(bitwise_equal(s, p));

    s = seed_out; p = seed_out;
    kernels::serial::matmul_tn(at.data(), b.data(), s.data(), m, k, n, accumulate);
    kernels::openmp::matmul_tn(at.data(), b.data(), p.data(), m, k, n, accumulate);
    CHECK(bitwise_equal(s, p));
  }
}

TEST_CASE("serial and openmp elementwise/stat kernels are bitwise identical") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng.index(64);
    const std::size_t cols = 1 + rng.index(64);
    const auto x = random_vec(rows * cols, rng);

    std::vector<double> ys(x.size()), yp(x.size());
    kernels::serial::tanh_forward(x.data(), ys.data(), x.size());
    kernels::openmp::tanh_forward(x.data(), yp.data(), x.size());
    CHECK(bitwise_equal(ys, yp));

    const auto dy = random_vec(x.size(), rng);
    auto dxs = random_vec(x.size(), rng);
    auto dxp = dxs;
    kernels::serial::tanh_backward(ys.data(), dy.data(), dxs.data(), x.size());
    kernels::openmp::tanh_backward(yp.data(), dy.data(), dxp.data(), x.size());
    CHECK(bitwise_equal(dxs, dxp));

    std::vector<double> ms(cols), vs(cols), mp(cols), vp(cols);
    kernels::serial::column_mean_var(x.data(), rows, cols, ms.data(), vs.data());
    kernels::openmp::column_mean_var(x.data(), rows, cols, mp.data(), vp.data());
    CHECK(bitwise_equal(ms, mp));
    CHECK(bitwise_equal(vs, vp));
  }
}

TEST_CASE("matmul_nt and matmul_tn match matmul_nn on transposed inputs") {
  Rng rng(13);
  const std::size_t m = 7, k = 5, n = 9;
  const auto a = random_vec(m * k, rng);
  const auto b = random_vec(k * n, rng);

  std::vector<double> expect(m * n);
  kernels::matmul_nn(a.data(), b.data(), expect.data(), m, k, n, false);

  // B^T laid out [n x k]
  std::vector<double> bt(n * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + i] = b[i * n + j];
  std::vector<double> got(m * n);
  kernels::matmul_nt(a.data(), bt.data(), got.data(), m, k, n, false);
  for (std::size_t i = 0; i < m * n; ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));

  // A^T laid out [k x m]
  std::vector<double> at(k * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) at[j * m + i] = a[i * k + j];
  kernels::matmul_tn(at.data(), b.data(), got.data(), m, k, n, false);
  for (std::size_t i = 0; i < m * n; ++i)
    CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("backend dispatch switches implementations") {
  const auto saved = kernels::backend();
  kernels::set_backend(kernels::Backend::Serial);
  CHECK(kernels::backend() == kernels::Backend::Serial);
  kernels::set_backend(kernels::Backend::OpenMP);
  CHECK(kernels::backend() == kernels::Backend::OpenMP);
  kernels::set_backend(saved);
}
