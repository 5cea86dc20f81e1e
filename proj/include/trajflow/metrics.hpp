#pragma once

#include <vector>

#include "trajflow/bspline.hpp"

namespace trajflow {

// Per-dimension smoothness statistics of one trajectory.
struct SmoothnessReport {
  std::vector<double> zcr_per_dim;      // velocity sign-flip rate, in [0, 1]
  std::vector<double> acc_p95_per_dim;  // action-units/s^2
  double zcr_avg = 0.0;
  double acc_p95_avg = 0.0;
};

// Fraction of consecutive forward-difference velocity pairs whose sign
// flips: v_t = (a_{t+1} - a_t)/dt, ZCR = #{v_t * v_{t+1} < 0} / (T - 2).
// Exact zeros never count as crossings. Requires T >= 3.
std::vector<double> zcr_velocity(const ActionChunk& traj);

// 95th percentile (nearest rank) of |second central difference| / dt^2
// per dimension. Requires T >= 3.
std::vector<double> acc_p95(const ActionChunk& traj);

SmoothnessReport smoothness(const ActionChunk& traj);

struct SmoothnessComparison {
  SmoothnessReport raw;
  SmoothnessReport splined;
  double zcr_reduction_pct = 0.0;      // 100 * (raw - splined) / raw
  double acc_p95_reduction_pct = 0.0;
};

// Side-by-side smoothness of a raw trajectory and its splined counterpart.
SmoothnessComparison smoothness_report(const ActionChunk& raw, const ActionChunk& splined);

// Nearest-rank percentile of the given values (q in (0, 100]).
double percentile_nearest_rank(std::vector<double> values, double q);

}  // namespace trajflow
