#pragma once

#include <cstddef>
#include <string_view>

// Numeric kernels behind the dense linear algebra used by the project.
// Each kernel has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant. The active backend is picked once at
// startup (overridable via TRAJFLOW_BACKEND=scalar|avx2 or set_backend),
// and the two are equivalence-tested against each other.
//
// All matrices are dense row-major doubles. matmul_* overwrite C.

namespace trajflow::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
void set_backend(Backend b);  // throws std::invalid_argument if unsupported
bool backend_supported(Backend b);
std::string_view backend_name(Backend b);

struct Ops {
  double (*dot)(const double* a, const double* b, size_t n);
  void (*axpy)(double alpha, const double* x, double* y, size_t n);  // y += alpha*x
  double (*sum_squares)(const double* a, size_t n);
  // C (m x n) = A (m x k) * B (k x n)
  void (*matmul_nn)(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
  // C (m x n) = A (m x k) * B^T, B stored (n x k)
  void (*matmul_nt)(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
  // C (m x n) = A^T * B, A stored (k x m), B (k x n)
  void (*matmul_tn)(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
};

const Ops& scalar_ops();
#if defined(TRAJFLOW_HAVE_AVX2)
const Ops& avx2_ops();
#endif

double dot(const double* a, const double* b, size_t n);
void axpy(double alpha, const double* x, double* y, size_t n);
double sum_squares(const double* a, size_t n);
void matmul_nn(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
void matmul_nt(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
void matmul_tn(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);

}  // namespace trajflow::kernels
