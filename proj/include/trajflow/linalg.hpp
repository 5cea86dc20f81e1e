#pragma once

#include "trajflow/matrix.hpp"

namespace trajflow {

// Minimum-residual solution of A X = B in the least-squares sense via
// Householder QR. A is m x n with m >= n, B is m x d; returns X (n x d).
// Throws IllConditionedError when a pivot column collapses numerically
// (relative to the largest initial column norm).
Matrix lstsq_householder(Matrix a, Matrix b, double rank_tol = 1e-12);

// Symmetric positive-definite solve via Cholesky; used for small dense
// systems. Throws IllConditionedError on a non-positive pivot.
Matrix solve_spd(Matrix a, Matrix b);

}  // namespace trajflow
