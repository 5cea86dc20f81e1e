#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "trajflow/errors.hpp"
#include "trajflow/refit.hpp"
#include "trajflow/rng.hpp"

using namespace trajflow;

namespace {

constexpr int kN = 8, kDegree = 3, kHist = 8, kChunkLen = 40;

BSplineCurve random_curve(RngStream& rng, int dims = 3) {
  Matrix pts(kN, dims);
  for (size_t i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
  return BSplineCurve(KnotVector::clamped_uniform(kN, kDegree, 0.0, 1.0), std::move(pts));
}

// Default placement: the executed history occupies the first P of the P+H
// chunk ticks.
std::vector<double> default_history_params(int p_rows = kHist) {
  std::vector<double> u(p_rows);
  for (int t = 0; t < p_rows; ++t) u[t] = static_cast<double>(t) / (kChunkLen - 1);
  return u;
}

RefitRequest random_request(RngStream& rng, int dims = 3) {
  RefitRequest req{random_curve(rng, dims), Matrix(kHist, dims),
                   default_history_params(), 0, kDefaultRefitLambda};
  for (size_t i = 0; i < req.executed_history.size(); ++i)
    req.executed_history.data()[i] = rng.normal();
  req.n_free = default_n_free(req.predicted.knots(), req.history_params.back());
  return req;
}

// Smooth short random walk, the shape executed histories actually have.
Matrix smooth_history(RngStream& rng, int rows, int dims, double step = 0.02) {
  Matrix h(rows, dims);
  for (int c = 0; c < dims; ++c) {
    double x = rng.uniform(-0.5, 0.5);
    for (int t = 0; t < rows; ++t) {
      h(t, c) = x;
      x += step * rng.normal();
    }
  }
  return h;
}

}  // namespace

TEST_CASE("default free-point rule") {
  const KnotVector kv = KnotVector::clamped_uniform(kN, kDegree, 0.0, 1.0);
  // History over the first 8 of 40 ticks reaches u = 7/39, inside the first
  // interior span, so the four clamped-left basis functions are free.
  CHECK(default_n_free(kv, default_history_params().back()) == 4);
  CHECK(default_n_free(kv, 0.0) == 1);
  CHECK(default_n_free(kv, 1.0) == kN);
  CHECK(default_n_free(kv, 0.45) == 6);
}

TEST_CASE("refit leaves an already-consistent prediction unchanged") {
  RngStream rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const BSplineCurve pred = random_curve(rng);
    RefitRequest req{pred, Matrix(kHist, 3), default_history_params(), 0,
                     kDefaultRefitLambda};
    for (int t = 0; t < kHist; ++t) {
      const auto on_curve = pred.eval(req.history_params[t]);
      req.executed_history.set_row(t, on_curve);
    }
    req.n_free = default_n_free(pred.knots(), req.history_params.back());

    const RefitResult result = refit(req);
    CHECK(max_abs_diff(result.refitted.control_points(), pred.control_points()) < 1e-8);
    CHECK(result.prefix_residual < 1e-12);
  }
}

TEST_CASE("free points match the reduced normal-equations oracle") {
  RngStream rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    RefitRequest req = random_request(rng);
    const RefitResult result = refit(req);

    const Matrix expect = oracles::reduced_refit_oracle(
        req.predicted.knots().values(), kDegree, req.predicted.control_points(),
        req.executed_history, req.history_params, req.n_free, req.lambda);
    for (int i = 0; i < req.n_free; ++i)
      for (int c = 0; c < 3; ++c)
        CHECK(std::abs(result.refitted.control_points()(i, c) - expect(i, c)) < 1e-8);
  }
}

TEST_CASE("all points free equals the regularized full solve") {
  RngStream rng(7);
  RefitRequest req = random_request(rng);
  req.n_free = kN;
  const RefitResult result = refit(req);
  const Matrix expect = oracles::reduced_refit_oracle(
      req.predicted.knots().values(), kDegree, req.predicted.control_points(),
      req.executed_history, req.history_params, kN, req.lambda);
  CHECK(max_abs_diff(result.refitted.control_points(), expect) < 1e-8);
}

TEST_CASE("tail control points are bit-identical") {
  RngStream rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const RefitRequest req = random_request(rng);
    const RefitResult result = refit(req);
    const Matrix& before = req.predicted.control_points();
    const Matrix& after = result.refitted.control_points();
    for (int i = req.n_free; i < kN; ++i)
      CHECK(std::memcmp(before.row(i), after.row(i), 3 * sizeof(double)) == 0);
  }
}

TEST_CASE("prefix residual never exceeds the prediction's residual") {
  RngStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const RefitRequest req = random_request(rng);
    const RefitResult result = refit(req);
    const double before =
        curve_residual(req.predicted, req.executed_history, req.history_params);
    CHECK(result.prefix_residual <= before + 1e-12);
  }
}

TEST_CASE("identical requests solve to identical points; chained refits drift only at ridge scale") {
  RngStream rng(13);
  const RefitRequest req = random_request(rng);
  const RefitResult first = refit(req);
  const RefitResult again = refit(req);
  CHECK(max_abs_diff(first.refitted.control_points(), again.refitted.control_points()) <
        1e-10);

  // Re-anchoring the ridge on the refitted points contracts toward the
  // unregularized optimum: each chained refit moves strictly less than the
  // one before, and the history residual never grows.
  RefitRequest chained = req;
  chained.predicted = first.refitted;
  const RefitResult second = refit(chained);
  const double first_move =
      max_abs_diff(first.refitted.control_points(), req.predicted.control_points());
  const double second_move =
      max_abs_diff(second.refitted.control_points(), first.refitted.control_points());
  CHECK(second_move < first_move);
  CHECK(second.prefix_residual <= first.prefix_residual + 1e-12);
}

TEST_CASE("locality: the curve is untouched where free functions vanish") {
  RngStream rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const RefitRequest req = random_request(rng);
    const RefitResult result = refit(req);
    const KnotVector& kv = req.predicted.knots();
    const double u_start = kv[req.n_free + kDegree];
    for (int s = 0; s <= 10; ++s) {
      const double u = u_start + (1.0 - u_start) * s / 10.0;
      const auto before = req.predicted.eval(u);
      const auto after = result.refitted.eval(u);
      for (int c = 0; c < 3; ++c) CHECK(std::abs(before[c] - after[c]) < 1e-12);
    }
  }
}

TEST_CASE("invalid requests are rejected") {
  RngStream rng(17);
  RefitRequest req = random_request(rng);

  RefitRequest bad = req;
  bad.n_free = 0;
  CHECK_THROWS_AS(refit(bad), std::invalid_argument);
  bad.n_free = kN + 1;
  CHECK_THROWS_AS(refit(bad), std::invalid_argument);

  bad = req;
  bad.history_params[2] = bad.history_params[1];  // not strictly increasing
  CHECK_THROWS_AS(refit(bad), std::invalid_argument);

  bad = req;
  bad.history_params.back() = 1.5;  // outside the domain
  CHECK_THROWS_AS(refit(bad), std::invalid_argument);

  // With the ridge disabled, an unsupported free block is rank deficient:
  // only basis 0 is nonzero at u = 0, so freeing two points underdetermines.
  RefitRequest deficient{random_curve(rng), Matrix(1, 3), {0.0}, 2, 0.0};
  CHECK_THROWS_AS(refit(deficient), IllConditionedError);
}

TEST_CASE("boundary discontinuity metric") {
  SUBCASE("zero when the next curve starts at the previous tail") {
    RngStream rng(19);
    const BSplineCurve curve = random_curve(rng);
    Matrix tail(2, 3);
    const auto start = curve.eval(0.0);
    tail.set_row(1, start);
    CHECK(boundary_discontinuity(tail, curve, kDefaultDt) < 1e-14);
  }
  SUBCASE("one-dimensional definition") {
    Matrix pts(4, 1);
    for (int i = 0; i < 4; ++i) pts(i, 0) = 0.5;
    const BSplineCurve curve(KnotVector::clamped_uniform(4, 3, 0.0, 1.0), pts);
    Matrix tail(2, 1);
    tail(0, 0) = 0.0;
    tail(1, 0) = 0.0;
    CHECK(boundary_discontinuity(tail, curve, 1.0) == doctest::Approx(0.5));
  }
  SUBCASE("refit reduces the splice discontinuity on randomized scenarios") {
    RngStream rng(23);
    double with_refit = 0.0, without = 0.0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
      RefitRequest req{random_curve(rng), smooth_history(rng, kHist, 3),
                       default_history_params(), 0, kDefaultRefitLambda};
      req.n_free = default_n_free(req.predicted.knots(), req.history_params.back());
      const RefitResult result = refit(req);
      without += boundary_discontinuity(req.executed_history, req.predicted, kDefaultDt);
      with_refit +=
          boundary_discontinuity(req.executed_history, result.refitted, kDefaultDt);
    }
    CHECK(with_refit / trials < without / trials);
  }
}
