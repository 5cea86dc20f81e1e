#include <cstring>

#include "trajflow/kernels.hpp"

// Reference kernels. Plain loops, no manual unrolling: these define the
// semantics the SIMD variants are tested against.

namespace trajflow::kernels {
namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_squares_scalar(const double* a, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void matmul_nn_scalar(const double* a, const double* b, double* c,
                      size_t m, size_t k, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (size_t i = 0; i < m; ++i) {
    for (size_t l = 0; l < k; ++l) {
      const double av = a[i * k + l];
      const double* brow = b + l * n;
      double* crow = c + i * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_scalar(const double* a, const double* b, double* c,
                      size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (size_t j = 0; j < n; ++j) {
      c[i * n + j] = dot_scalar(arow, b + j * k, k);
    }
  }
}

void matmul_tn_scalar(const double* a, const double* b, double* c,
                      size_t m, size_t k, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (size_t l = 0; l < k; ++l) {
    const double* brow = b + l * n;
    for (size_t i = 0; i < m; ++i) {
      const double av = a[l * m + i];
      double* crow = c + i * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{dot_scalar,       axpy_scalar,      sum_squares_scalar,
                       matmul_nn_scalar, matmul_nt_scalar, matmul_tn_scalar};
  return ops;
}

}  // namespace trajflow::kernels
