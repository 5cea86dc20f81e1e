#include "trajflow/refit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "trajflow/errors.hpp"
#include "trajflow/linalg.hpp"

namespace trajflow {

int default_n_free(const KnotVector& kv, double max_history_param) {
  if (!kv.in_domain(max_history_param))
    throw std::invalid_argument("default_n_free: history parameter outside domain");
  const int n = kv.n_ctrl();
  for (int m = 1; m <= n; ++m)
    if (kv[m] >= max_history_param) return m;
  return n;
}

namespace {

void validate(const RefitRequest& req) {
  const int n = req.predicted.n_ctrl();
  const int p_rows = req.executed_history.rows();
  if (req.n_free < 1 || req.n_free > n)
    throw std::invalid_argument("refit: n_free must be in [1, n_ctrl], got " +
                                std::to_string(req.n_free));
  if (p_rows < 1) throw std::invalid_argument("refit: empty executed history");
  if (req.executed_history.cols() != req.predicted.dims())
    throw std::invalid_argument("refit: history dimension mismatch");
  if (static_cast<int>(req.history_params.size()) != p_rows)
    throw std::invalid_argument("refit: history_params size mismatch");
  if (req.lambda < 0.0) throw std::invalid_argument("refit: negative lambda");
  double prev = -std::numeric_limits<double>::infinity();
  for (double u : req.history_params) {
    if (!req.predicted.knots().in_domain(u))
      throw std::invalid_argument("refit: history parameter outside curve domain");
    if (u <= prev)
      throw std::invalid_argument("refit: history_params must be strictly increasing");
    prev = u;
  }
}

}  // namespace

RefitResult refit(const RefitRequest& req) {
  validate(req);

  const BSplineCurve& pred = req.predicted;
  const KnotVector& kv = pred.knots();
  const int degree = kv.degree();
  const int n = pred.n_ctrl();
  const int d = pred.dims();
  const int n_free = req.n_free;
  const int p_rows = req.executed_history.rows();

  // Dense basis rows over the history parameters. Only the first n_free
  // columns enter the solve; the fixed tail moves to the right-hand side.
  Matrix full(p_rows, n);
  double basis[32];
  for (int t = 0; t < p_rows; ++t) {
    const double u = req.history_params[t];
    const int span = kv.find_span(u);
    nonzero_basis(kv, span, u, basis);
    for (int r = 0; r <= degree; ++r) full(t, span - degree + r) = basis[r];
  }

  const int rows = p_rows + n_free;  // data rows plus sqrt(lambda) ridge rows
  Matrix design(rows, n_free);
  Matrix rhs(rows, d);
  for (int t = 0; t < p_rows; ++t) {
    for (int j = 0; j < n_free; ++j) design(t, j) = full(t, j);
    for (int c = 0; c < d; ++c) {
      double fixed = 0.0;
      for (int j = n_free; j < n; ++j) fixed += full(t, j) * pred.control_points()(j, c);
      rhs(t, c) = req.executed_history(t, c) - fixed;
    }
  }
  const double sqrt_lambda = std::sqrt(req.lambda);
  for (int j = 0; j < n_free; ++j) {
    design(p_rows + j, j) = sqrt_lambda;
    for (int c = 0; c < d; ++c)
      rhs(p_rows + j, c) = sqrt_lambda * pred.control_points()(j, c);
  }

  Matrix solved;
  try {
    solved = lstsq_householder(std::move(design), std::move(rhs));
  } catch (const IllConditionedError&) {
    throw IllConditionedError(
        "refit: free block is rank deficient and regularization is off");
  }

  Matrix ctrl = pred.control_points();
  for (int j = 0; j < n_free; ++j)
    for (int c = 0; c < d; ++c) ctrl(j, c) = solved(j, c);

  BSplineCurve refitted(kv, std::move(ctrl));
  const double residual =
      curve_residual(refitted, req.executed_history, req.history_params);
  return RefitResult{std::move(refitted), residual, n_free};
}

double boundary_discontinuity(const Matrix& prev_tail, const BSplineCurve& next_curve,
                              double dt) {
  if (prev_tail.rows() < 1)
    throw std::invalid_argument("boundary_discontinuity: empty previous tail");
  if (prev_tail.cols() != next_curve.dims())
    throw std::invalid_argument("boundary_discontinuity: dimension mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("boundary_discontinuity: dt must be positive");

  const auto first = next_curve.eval(next_curve.domain_min());
  const double* last = prev_tail.row(prev_tail.rows() - 1);
  double sq = 0.0;
  for (int c = 0; c < prev_tail.cols(); ++c) {
    const double e = first[c] - last[c];
    sq += e * e;
  }
  return std::sqrt(sq) / dt;
}

}  // namespace trajflow
