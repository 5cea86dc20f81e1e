#include "trajflow/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "trajflow/errors.hpp"

namespace trajflow {

Matrix lstsq_householder(Matrix a, Matrix b, double rank_tol) {
  const int m = a.rows();
  const int n = a.cols();
  const int d = b.cols();
  if (m < n) throw std::invalid_argument("lstsq_householder: need rows >= cols");
  if (b.rows() != m) throw std::invalid_argument("lstsq_householder: rhs row mismatch");

  double max_col_norm = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    max_col_norm = std::max(max_col_norm, std::sqrt(s));
  }
  const double pivot_floor = rank_tol * std::max(max_col_norm, 1e-300);

  for (int k = 0; k < n; ++k) {
    double sigma = 0.0;
    for (int i = k; i < m; ++i) sigma += a(i, k) * a(i, k);
    const double norm = std::sqrt(sigma);
    if (norm <= pivot_floor)
      throw IllConditionedError("least-squares design matrix is rank deficient at column " +
                                std::to_string(k));

    const double alpha = a(k, k) > 0.0 ? -norm : norm;
    const double v0 = a(k, k) - alpha;
    // |v|^2 computed without cancellation: alpha has sign opposite to a(k,k).
    const double vnorm2 = 2.0 * (sigma - alpha * a(k, k));
    const double scale = 2.0 / vnorm2;

    auto reflect = [&](Matrix& mat, int col) {
      double s = v0 * mat(k, col);
      for (int i = k + 1; i < m; ++i) s += a(i, k) * mat(i, col);
      s *= scale;
      mat(k, col) -= s * v0;
      for (int i = k + 1; i < m; ++i) mat(i, col) -= s * a(i, k);
    };

    for (int j = k + 1; j < n; ++j) reflect(a, j);
    for (int j = 0; j < d; ++j) reflect(b, j);
    a(k, k) = alpha;  // Householder vector stays below the diagonal
  }

  Matrix x(n, d);
  for (int col = 0; col < d; ++col) {
    for (int i = n - 1; i >= 0; --i) {
      double s = b(i, col);
      for (int j = i + 1; j < n; ++j) s -= a(i, j) * x(j, col);
      x(i, col) = s / a(i, i);
    }
  }
  return x;
}

Matrix solve_spd(Matrix a, Matrix b) {
  const int n = a.rows();
  if (a.cols() != n || b.rows() != n)
    throw std::invalid_argument("solve_spd: shape mismatch");

  // In-place lower Cholesky.
  for (int j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (int k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
    if (!(diag > 0.0))
      throw IllConditionedError("solve_spd: matrix not positive definite");
    const double ljj = std::sqrt(diag);
    a(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
  }

  const int d = b.cols();
  Matrix x = b;
  for (int col = 0; col < d; ++col) {
    for (int i = 0; i < n; ++i) {  // forward: L y = b
      double s = x(i, col);
      for (int k = 0; k < i; ++k) s -= a(i, k) * x(k, col);
      x(i, col) = s / a(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {  // backward: L^T x = y
      double s = x(i, col);
      for (int k = i + 1; k < n; ++k) s -= a(k, i) * x(k, col);
      x(i, col) = s / a(i, i);
    }
  }
  return x;
}

}  // namespace trajflow
