#pragma once

#include <vector>

#include "trajflow/bspline.hpp"

namespace trajflow {

inline constexpr double kDefaultRefitLambda = 1e-6;

// Request to re-solve the leading control points of a freshly predicted
// curve against the actions that were actually executed. Control points
// with index >= n_free keep the predicted values bit for bit.
struct RefitRequest {
  BSplineCurve predicted;
  Matrix executed_history;             // P x D dispatched actions
  std::vector<double> history_params;  // strictly increasing, inside the domain
  int n_free = 0;
  // Tikhonov pull of the free block toward the prediction; keeps the solve
  // well posed when n_free exceeds what the history can pin down.
  double lambda = kDefaultRefitLambda;
};

struct RefitResult {
  BSplineCurve refitted;
  double prefix_residual;  // sum of squared errors on the history (data term)
  int n_free;
};

// Number of leading control points whose basis functions have support
// intersecting [domain_min, max_history_param]: the smallest m such that
// knots[m] >= max_history_param, so every fixed basis function vanishes on
// the history window. Clamped to [1, n_ctrl].
int default_n_free(const KnotVector& kv, double max_history_param);

RefitResult refit(const RefitRequest& req);

// Velocity-scale discontinuity at a splice point: ||first sample of the
// next curve - last row of prev_tail|| / dt. The first sample is the curve
// value at its domain start.
double boundary_discontinuity(const Matrix& prev_tail, const BSplineCurve& next_curve,
                              double dt);

}  // namespace trajflow
