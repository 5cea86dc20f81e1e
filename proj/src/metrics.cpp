#include "trajflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace trajflow {

namespace {

void require_ticks(const ActionChunk& traj, int minimum, const char* who) {
  if (traj.ticks() < minimum)
    throw std::invalid_argument(std::string(who) + ": need at least " +
                                std::to_string(minimum) + " timesteps");
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

}  // namespace

double percentile_nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q out of range");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<size_t>(std::ceil(q / 100.0 * values.size()));
  return values[std::min(rank, values.size()) - 1];
}

std::vector<double> zcr_velocity(const ActionChunk& traj) {
  require_ticks(traj, 3, "zcr_velocity");
  const int t_count = traj.ticks();
  const int d = traj.dims();
  const int pairs = t_count - 2;

  std::vector<double> out(d, 0.0);
  for (int c = 0; c < d; ++c) {
    int crossings = 0;
    double prev_v = (traj.actions(1, c) - traj.actions(0, c)) / traj.dt;
    for (int t = 1; t < t_count - 1; ++t) {
      const double v = (traj.actions(t + 1, c) - traj.actions(t, c)) / traj.dt;
      if (prev_v * v < 0.0) ++crossings;
      prev_v = v;
    }
    out[c] = static_cast<double>(crossings) / pairs;
  }
  return out;
}

std::vector<double> acc_p95(const ActionChunk& traj) {
  require_ticks(traj, 3, "acc_p95");
  const int t_count = traj.ticks();
  const int d = traj.dims();
  const double dt2 = traj.dt * traj.dt;

  std::vector<double> out(d);
  std::vector<double> magnitudes(t_count - 2);
  for (int c = 0; c < d; ++c) {
    for (int t = 1; t < t_count - 1; ++t)
      magnitudes[t - 1] = std::abs(traj.actions(t + 1, c) - 2.0 * traj.actions(t, c) +
                                   traj.actions(t - 1, c)) /
                          dt2;
    out[c] = percentile_nearest_rank(magnitudes, 95.0);
  }
  return out;
}

SmoothnessReport smoothness(const ActionChunk& traj) {
  SmoothnessReport r;
  r.zcr_per_dim = zcr_velocity(traj);
  r.acc_p95_per_dim = acc_p95(traj);
  r.zcr_avg = mean(r.zcr_per_dim);
  r.acc_p95_avg = mean(r.acc_p95_per_dim);
  return r;
}

SmoothnessComparison smoothness_report(const ActionChunk& raw, const ActionChunk& splined) {
  if (!raw.actions.same_shape(splined.actions))
    throw std::invalid_argument("smoothness_report: shape mismatch");

  SmoothnessComparison cmp;
  cmp.raw = smoothness(raw);
  cmp.splined = smoothness(splined);
  auto reduction = [](double before, double after) {
    return before == 0.0 ? 0.0 : 100.0 * (before - after) / before;
  };
  cmp.zcr_reduction_pct = reduction(cmp.raw.zcr_avg, cmp.splined.zcr_avg);
  cmp.acc_p95_reduction_pct = reduction(cmp.raw.acc_p95_avg, cmp.splined.acc_p95_avg);
  return cmp;
}

}  // namespace trajflow
