#pragma once

// Test-only oracles, written against the textbook definitions and kept
// independent of the library's solver paths: Gaussian elimination instead
// of Householder QR / Cholesky, a standalone basis recursion instead of the
// span-local evaluator, explicit normal equations instead of the fitting
// code, and an event-driven replay of the async schedule.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "trajflow/matrix.hpp"

namespace oracles {

using trajflow::Matrix;

// Gaussian elimination with partial pivoting; A square, b may have many
// columns.
inline Matrix gauss_solve(Matrix a, Matrix b) {
  const int n = a.rows();
  if (a.cols() != n || b.rows() != n) throw std::invalid_argument("gauss_solve: shape");
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(pivot, k))) pivot = i;
    if (a(pivot, k) == 0.0) throw std::runtime_error("gauss_solve: singular");
    if (pivot != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(pivot, j));
      for (int j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(pivot, j));
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (int j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  Matrix x(n, b.cols());
  for (int col = 0; col < b.cols(); ++col)
    for (int i = n - 1; i >= 0; --i) {
      double s = b(i, col);
      for (int j = i + 1; j < n; ++j) s -= a(i, j) * x(j, col);
      x(i, col) = s / a(i, i);
    }
  return x;
}

// Cox-de Boor recursion straight from the definition, with 0/0 := 0 and a
// closed final interval at the right end of the domain.
inline double basis(const std::vector<double>& knots, int i, int p, double u,
                    double right_end) {
  if (p == 0) {
    if (knots[i] <= u && u < knots[i + 1]) return 1.0;
    if (u == right_end && knots[i] < knots[i + 1] && knots[i + 1] == right_end) return 1.0;
    return 0.0;
  }
  double acc = 0.0;
  const double dl = knots[i + p] - knots[i];
  if (dl > 0.0) acc += (u - knots[i]) / dl * basis(knots, i, p - 1, u, right_end);
  const double dr = knots[i + p + 1] - knots[i + 1];
  if (dr > 0.0)
    acc += (knots[i + p + 1] - u) / dr * basis(knots, i + 1, p - 1, u, right_end);
  return acc;
}

// Clamped uniform knots on [lo, hi], built independently of the library.
inline std::vector<double> clamped_knots(int n_ctrl, int degree, double lo, double hi) {
  std::vector<double> knots(n_ctrl + degree + 1);
  const int spans = n_ctrl - degree;
  for (int i = 0; i < static_cast<int>(knots.size()); ++i) {
    if (i <= degree)
      knots[i] = lo;
    else if (i >= n_ctrl)
      knots[i] = hi;
    else
      knots[i] = lo + (hi - lo) * (i - degree) / spans;
  }
  return knots;
}

// Dense design matrix of the fit: rows are basis values at u_t = t/(T-1).
inline Matrix design_matrix(int t_count, int n_ctrl, int degree) {
  const auto knots = clamped_knots(n_ctrl, degree, 0.0, 1.0);
  Matrix b(t_count, n_ctrl);
  for (int t = 0; t < t_count; ++t) {
    const double u = static_cast<double>(t) / (t_count - 1);
    for (int i = 0; i < n_ctrl; ++i) b(t, i) = basis(knots, i, degree, u, 1.0);
  }
  return b;
}

// Normal-equations least squares: (B^T B)^(-1) B^T a, one column per action
// dimension.
inline Matrix normal_equations_fit(const Matrix& actions, int n_ctrl, int degree) {
  const Matrix b = design_matrix(actions.rows(), n_ctrl, degree);
  Matrix btb(n_ctrl, n_ctrl);
  Matrix bta(n_ctrl, actions.cols());
  for (int i = 0; i < n_ctrl; ++i) {
    for (int j = 0; j < n_ctrl; ++j) {
      double s = 0.0;
      for (int t = 0; t < b.rows(); ++t) s += b(t, i) * b(t, j);
      btb(i, j) = s;
    }
    for (int c = 0; c < actions.cols(); ++c) {
      double s = 0.0;
      for (int t = 0; t < b.rows(); ++t) s += b(t, i) * actions(t, c);
      bta(i, c) = s;
    }
  }
  return gauss_solve(std::move(btb), std::move(bta));
}

// Reduced normal equations of the constrained refit: only the first n_free
// control points are solved, the fixed tail moves to the right-hand side,
// and the ridge term pulls toward the predicted points.
inline Matrix reduced_refit_oracle(const std::vector<double>& knots, int degree,
                                   const Matrix& predicted_points,
                                   const Matrix& history,
                                   const std::vector<double>& params, int n_free,
                                   double lambda) {
  const int n = predicted_points.rows();
  const int d = predicted_points.cols();
  const int rows = history.rows();
  const double right_end = knots[n];

  Matrix full(rows, n);
  for (int t = 0; t < rows; ++t)
    for (int i = 0; i < n; ++i) full(t, i) = basis(knots, i, degree, params[t], right_end);

  Matrix m(n_free, n_free);
  Matrix rhs(n_free, d);
  for (int i = 0; i < n_free; ++i) {
    for (int j = 0; j < n_free; ++j) {
      double s = 0.0;
      for (int t = 0; t < rows; ++t) s += full(t, i) * full(t, j);
      m(i, j) = s + (i == j ? lambda : 0.0);
    }
    for (int c = 0; c < d; ++c) {
      double s = 0.0;
      for (int t = 0; t < rows; ++t) {
        double fixed = 0.0;
        for (int j = n_free; j < n; ++j) fixed += full(t, j) * predicted_points(j, c);
        s += full(t, i) * (history(t, c) - fixed);
      }
      rhs(i, c) = s + lambda * predicted_points(i, c);
    }
  }
  return gauss_solve(std::move(m), std::move(rhs));
}

// Least-squares projection of x onto the span of the given basis vectors
// (columns of v), via the Gram matrix. Used to check that truncated-DCT
// reconstruction is the optimal one over its basis.
inline std::vector<double> project_onto(const Matrix& v, const std::vector<double>& x) {
  const int n = v.rows();
  const int k = v.cols();
  Matrix gram(k, k);
  Matrix vtx(k, 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += v(t, i) * v(t, j);
      gram(i, j) = s;
    }
    double s = 0.0;
    for (int t = 0; t < n; ++t) s += v(t, i) * x[t];
    vtx(i, 0) = s;
  }
  const Matrix coeff = gauss_solve(std::move(gram), std::move(vtx));
  std::vector<double> out(n, 0.0);
  for (int t = 0; t < n; ++t)
    for (int i = 0; i < k; ++i) out[t] += v(t, i) * coeff(i, 0);
  return out;
}

// Event-driven replay of the async schedule with fixed latency: returns the
// splice ticks the executor must produce (bootstrap at tick 0 excluded).
inline std::vector<int> async_splice_ticks(int horizon, int latency_ticks, int future) {
  std::vector<int> ticks;
  int anchor = 0;  // inference in flight was started here
  while (true) {
    const int done = anchor + std::max(1, latency_ticks);
    if (done >= horizon) break;
    if (anchor + future <= done) break;  // starved instead of splicing
    ticks.push_back(done);
    anchor = done;
  }
  return ticks;
}

}  // namespace oracles
