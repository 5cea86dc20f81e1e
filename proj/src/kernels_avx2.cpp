#include "trajflow/kernels.hpp"

#if defined(TRAJFLOW_HAVE_AVX2)

#include <immintrin.h>

#include <cstring>

// AVX2+FMA variants of the reference kernels. 4 doubles per vector;
// tails fall back to scalar arithmetic. Results may differ from the
// scalar backend by reassociation-level rounding only.

namespace trajflow::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

void axpy_avx2(double alpha, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_squares_avx2(const double* a, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double total = hsum(acc);
  for (; i < n; ++i) total += a[i] * a[i];
  return total;
}

// Broadcast-and-FMA rank-1 accumulation down the shared inner loop.
inline void fma_row(double av, const double* brow, double* crow, size_t n) {
  const __m256d va = _mm256_set1_pd(av);
  size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d vc = _mm256_loadu_pd(crow + j);
    vc = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + j), vc);
    _mm256_storeu_pd(crow + j, vc);
  }
  for (; j < n; ++j) crow[j] += av * brow[j];
}

void matmul_nn_avx2(const double* a, const double* b, double* c,
                    size_t m, size_t k, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (size_t l = 0; l < k; ++l) fma_row(a[i * k + l], b + l * n, crow, n);
  }
}

void matmul_nt_avx2(const double* a, const double* b, double* c,
                    size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (size_t j = 0; j < n; ++j) c[i * n + j] = dot_avx2(arow, b + j * k, k);
  }
}

void matmul_tn_avx2(const double* a, const double* b, double* c,
                    size_t m, size_t k, size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (size_t l = 0; l < k; ++l) {
    const double* brow = b + l * n;
    for (size_t i = 0; i < m; ++i) fma_row(a[l * m + i], brow, c + i * n, n);
  }
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{dot_avx2,       axpy_avx2,      sum_squares_avx2,
                       matmul_nn_avx2, matmul_nt_avx2, matmul_tn_avx2};
  return ops;
}

}  // namespace trajflow::kernels

#endif  // TRAJFLOW_HAVE_AVX2
