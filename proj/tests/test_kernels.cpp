#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "trajflow/kernels.hpp"
#include "trajflow/rng.hpp"

using namespace trajflow;
namespace k = trajflow::kernels;

namespace {

std::vector<double> random_vec(size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

void check_close(double a, double b, double tol = 1e-11) {
  CHECK(std::abs(a - b) <= tol * (1.0 + std::max(std::abs(a), std::abs(b))));
}

}  // namespace

TEST_CASE("scalar kernels match a naive reference") {
  RngStream rng(1);
  const size_t m = 5, kk = 7, n = 6;
  const auto a = random_vec(m * kk, rng);
  const auto b = random_vec(kk * n, rng);
  std::vector<double> c(m * n);
  k::scalar_ops().matmul_nn(a.data(), b.data(), c.data(), m, kk, n);
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      double expect = 0.0;
      for (size_t l = 0; l < kk; ++l) expect += a[i * kk + l] * b[l * n + j];
      check_close(c[i * n + j], expect, 1e-13);
    }
}

TEST_CASE("simd backend agrees with the scalar reference") {
  if (!k::backend_supported(k::Backend::avx2)) {
    MESSAGE("avx2 unavailable; equivalence suite covers scalar only");
    return;
  }
  const k::Ops& s = k::scalar_ops();
  const k::Ops& v = k::avx2_ops();
  RngStream rng(7);

  for (size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 257u}) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    check_close(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n));
    check_close(s.sum_squares(a.data(), n), v.sum_squares(a.data(), n));

    auto y1 = random_vec(n, rng);
    auto y2 = y1;
    s.axpy(0.37, a.data(), y1.data(), n);
    v.axpy(0.37, a.data(), y2.data(), n);
    for (size_t i = 0; i < n; ++i) check_close(y1[i], y2[i]);
  }

  for (auto [m, kk, n] : std::vector<std::array<size_t, 3>>{
           {1, 1, 1}, {2, 3, 4}, {5, 8, 5}, {7, 13, 9}, {16, 16, 16}, {33, 20, 41}}) {
    const auto a = random_vec(m * kk, rng);
    const auto b_nn = random_vec(kk * n, rng);
    const auto b_nt = random_vec(n * kk, rng);
    const auto a_tn = random_vec(kk * m, rng);
    std::vector<double> c1(m * n), c2(m * n);

    s.matmul_nn(a.data(), b_nn.data(), c1.data(), m, kk, n);
    v.matmul_nn(a.data(), b_nn.data(), c2.data(), m, kk, n);
    for (size_t i = 0; i < m * n; ++i) check_close(c1[i], c2[i]);

    s.matmul_nt(a.data(), b_nt.data(), c1.data(), m, kk, n);
    v.matmul_nt(a.data(), b_nt.data(), c2.data(), m, kk, n);
    for (size_t i = 0; i < m * n; ++i) check_close(c1[i], c2[i]);

    s.matmul_tn(a_tn.data(), b_nn.data(), c1.data(), m, kk, n);
    v.matmul_tn(a_tn.data(), b_nn.data(), c2.data(), m, kk, n);
    for (size_t i = 0; i < m * n; ++i) check_close(c1[i], c2[i]);
  }
}

TEST_CASE("backend selection is explicit and reversible") {
  const k::Backend original = k::active_backend();
  k::set_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);

  double a[3] = {1.0, 2.0, 3.0};
  double b[3] = {4.0, 5.0, 6.0};
  CHECK(k::dot(a, b, 3) == doctest::Approx(32.0));

  if (k::backend_supported(k::Backend::avx2)) {
    k::set_backend(k::Backend::avx2);
    CHECK(k::active_backend() == k::Backend::avx2);
    CHECK(k::dot(a, b, 3) == doctest::Approx(32.0));
  } else {
    CHECK_THROWS_AS(k::set_backend(k::Backend::avx2), std::invalid_argument);
  }
  k::set_backend(original);
}
