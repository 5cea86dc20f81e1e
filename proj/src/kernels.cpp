#include "trajflow/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace trajflow::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if defined(TRAJFLOW_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("TRAJFLOW_BACKEND")) {
    const std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && backend_supported(Backend::avx2)) return Backend::avx2;
  }
  return backend_supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

struct State {
  Backend backend;
  const Ops* ops;
};

State& state() {
  static State s = [] {
    const Backend b = pick_default();
#if defined(TRAJFLOW_HAVE_AVX2)
    if (b == Backend::avx2) return State{b, &avx2_ops()};
#else
    (void)b;
#endif
    return State{Backend::scalar, &scalar_ops()};
  }();
  return s;
}

}  // namespace

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2_fma();
  }
  return false;
}

std::string_view backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

Backend active_backend() { return state().backend; }

void set_backend(Backend b) {
  if (!backend_supported(b))
    throw std::invalid_argument("kernel backend not supported on this machine: " +
                                std::string(backend_name(b)));
  state().backend = b;
#if defined(TRAJFLOW_HAVE_AVX2)
  state().ops = (b == Backend::avx2) ? &avx2_ops() : &scalar_ops();
#else
  state().ops = &scalar_ops();
#endif
}

double dot(const double* a, const double* b, size_t n) { return state().ops->dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, size_t n) {
  state().ops->axpy(alpha, x, y, n);
}
double sum_squares(const double* a, size_t n) { return state().ops->sum_squares(a, n); }
void matmul_nn(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  state().ops->matmul_nn(a, b, c, m, k, n);
}
void matmul_nt(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  state().ops->matmul_nt(a, b, c, m, k, n);
}
void matmul_tn(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  state().ops->matmul_tn(a, b, c, m, k, n);
}

}  // namespace trajflow::kernels
