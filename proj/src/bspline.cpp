#include "trajflow/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "trajflow/errors.hpp"
#include "trajflow/linalg.hpp"

namespace trajflow {

namespace {
constexpr int kMaxDegree = 15;  // stack buffers in the hot paths
}

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0) throw std::invalid_argument("KnotVector: negative degree");
  if (degree_ > kMaxDegree) throw std::invalid_argument("KnotVector: degree too large");
  const int count = static_cast<int>(knots_.size());
  if (count < 2 * (degree_ + 1))
    throw std::invalid_argument("KnotVector: need at least 2*(degree+1) knots");
  for (int i = 1; i < count; ++i)
    if (knots_[i] < knots_[i - 1])
      throw std::invalid_argument("KnotVector: knots must be non-decreasing");
  for (int i = 1; i <= degree_; ++i) {
    if (knots_[i] != knots_[0] || knots_[count - 1 - i] != knots_[count - 1])
      throw std::invalid_argument("KnotVector: not clamped (open-uniform)");
  }
  if (!(domain_max() > domain_min()))
    throw std::invalid_argument("KnotVector: degenerate domain");
  // Interior knots must partition the domain evenly.
  const int spans = n_ctrl() - degree_;
  const double h = (domain_max() - domain_min()) / spans;
  const double tol = 1e-9 * std::max(1.0, std::abs(domain_max() - domain_min()));
  for (int j = 1; j < spans; ++j) {
    const double expected = domain_min() + j * h;
    if (std::abs(knots_[degree_ + j] - expected) > tol)
      throw std::invalid_argument("KnotVector: interior knots not uniform");
  }
}

KnotVector KnotVector::clamped_uniform(int n_ctrl, int degree, double lo, double hi) {
  if (degree < 0) throw std::invalid_argument("make_clamped_knots: negative degree");
  if (n_ctrl < degree + 1)
    throw std::invalid_argument("make_clamped_knots: need n_ctrl >= degree + 1");
  if (!(hi > lo)) throw std::invalid_argument("make_clamped_knots: degenerate domain");

  const int spans = n_ctrl - degree;
  std::vector<double> knots(static_cast<size_t>(n_ctrl) + degree + 1);
  for (int i = 0; i <= degree; ++i) {
    knots[i] = lo;
    knots[knots.size() - 1 - i] = hi;
  }
  for (int j = 1; j < spans; ++j)
    knots[degree + j] = lo + j * (hi - lo) / spans;
  return KnotVector(std::move(knots), degree);
}

KnotVector make_clamped_knots(int n_ctrl, int degree, double lo, double hi) {
  return KnotVector::clamped_uniform(n_ctrl, degree, lo, hi);
}

int KnotVector::find_span(double u) const {
  const int n = n_ctrl();
  if (u >= knots_[n]) return n - 1;  // right end closes the final span
  int lo = degree_, hi = n;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (u < knots_[mid] ? hi : lo) = mid;
  }
  return lo;
}

namespace {

double basis_recursive(const std::vector<double>& knots, int i, int p, double u,
                       double right_end) {
  if (p == 0) {
    if (knots[i] <= u && u < knots[i + 1]) return 1.0;
    // Close the final nonempty interval so the clamped curve reaches its
    // last control point.
    if (u == right_end && knots[i + 1] == right_end && knots[i] < knots[i + 1]) return 1.0;
    return 0.0;
  }
  double left = 0.0, right = 0.0;
  const double ld = knots[i + p] - knots[i];
  if (ld != 0.0) left = (u - knots[i]) / ld * basis_recursive(knots, i, p - 1, u, right_end);
  const double rd = knots[i + p + 1] - knots[i + 1];
  if (rd != 0.0)
    right = (knots[i + p + 1] - u) / rd * basis_recursive(knots, i + 1, p - 1, u, right_end);
  return left + right;
}

}  // namespace

double basis_function(const KnotVector& kv, int i, int p, double u) {
  if (!kv.in_domain(u))
    throw std::domain_error("basis_function: parameter outside knot span: " +
                            std::to_string(u));
  if (p < 0 || i < 0 || i + p + 1 >= kv.size())
    throw std::invalid_argument("basis_function: index/degree out of range");
  return basis_recursive(kv.values(), i, p, u, kv.domain_max());
}

void nonzero_basis(const KnotVector& kv, int span, double u, double* out) {
  const int p = kv.degree();
  double left[kMaxDegree + 1];
  double right[kMaxDegree + 1];
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - kv[span + 1 - j];
    right[j] = kv[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

BSplineCurve::BSplineCurve(KnotVector knots, Matrix control_points)
    : knots_(std::move(knots)), points_(std::move(control_points)) {
  if (points_.rows() != knots_.n_ctrl())
    throw std::invalid_argument("BSplineCurve: control point rows must equal knot n_ctrl");
  if (points_.cols() < 1)
    throw std::invalid_argument("BSplineCurve: need at least one dimension");
}

void BSplineCurve::eval_into(double u, double* out) const {
  if (!knots_.in_domain(u))
    throw std::domain_error("BSplineCurve::eval: parameter outside domain: " +
                            std::to_string(u));
  const int p = degree();
  const int span = knots_.find_span(u);
  double basis[kMaxDegree + 1];
  nonzero_basis(knots_, span, u, basis);

  const int d = dims();
  std::fill(out, out + d, 0.0);
  for (int r = 0; r <= p; ++r) {
    const double w = basis[r];
    const double* ctrl = points_.row(span - p + r);
    for (int c = 0; c < d; ++c) out[c] += w * ctrl[c];
  }
}

std::vector<double> BSplineCurve::eval(double u) const {
  std::vector<double> out(dims());
  eval_into(u, out.data());
  return out;
}

BSplineCurve BSplineCurve::derivative(int order) const {
  if (order < 1 || order > degree())
    throw std::invalid_argument("derivative: order must be in [1, degree]");

  KnotVector kv = knots_;
  Matrix pts = points_;
  for (int step = 0; step < order; ++step) {
    const int p = kv.degree();
    const int n = pts.rows();
    Matrix next(n - 1, pts.cols());
    for (int i = 0; i < n - 1; ++i) {
      const double denom = kv[i + p + 1] - kv[i + 1];
      const double scale = p / denom;
      for (int c = 0; c < pts.cols(); ++c)
        next(i, c) = scale * (pts(i + 1, c) - pts(i, c));
    }
    std::vector<double> inner(kv.values().begin() + 1, kv.values().end() - 1);
    kv = KnotVector(std::move(inner), p - 1);
    pts = std::move(next);
  }
  return BSplineCurve(std::move(kv), std::move(pts));
}

ActionChunk BSplineCurve::reconstruct(int n_samples, double dt) const {
  if (n_samples < 2) throw std::invalid_argument("reconstruct: need n_samples >= 2");
  Matrix out(n_samples, dims());
  const auto params = uniform_params(n_samples, domain_min(), domain_max());
  for (int t = 0; t < n_samples; ++t) eval_into(params[t], out.row(t));
  return ActionChunk{std::move(out), dt};
}

std::vector<double> uniform_params(int count, double lo, double hi) {
  if (count < 2) throw std::invalid_argument("uniform_params: need count >= 2");
  std::vector<double> u(count);
  for (int t = 0; t < count; ++t) u[t] = lo + t * (hi - lo) / (count - 1);
  u.back() = hi;  // exact endpoint regardless of rounding
  return u;
}

double curve_residual(const BSplineCurve& curve, const Matrix& targets,
                      const std::vector<double>& params) {
  if (static_cast<int>(params.size()) != targets.rows())
    throw std::invalid_argument("curve_residual: row/parameter count mismatch");
  if (targets.cols() != curve.dims())
    throw std::invalid_argument("curve_residual: dimension mismatch");
  std::vector<double> value(curve.dims());
  double sse = 0.0;
  for (int t = 0; t < targets.rows(); ++t) {
    curve.eval_into(params[t], value.data());
    for (int c = 0; c < targets.cols(); ++c) {
      const double e = targets(t, c) - value[c];
      sse += e * e;
    }
  }
  return sse;
}

FitResult fit_least_squares(const ActionChunk& chunk, int n_ctrl, int degree) {
  const int t_count = chunk.ticks();
  if (degree < 0) throw std::invalid_argument("fit_least_squares: negative degree");
  if (n_ctrl < degree + 1)
    throw std::invalid_argument("fit_least_squares: need n_ctrl >= degree + 1");
  if (t_count < 2) throw std::invalid_argument("fit_least_squares: need at least 2 samples");
  if (t_count < n_ctrl)
    throw IllConditionedError("fit_least_squares: fewer samples than control points (" +
                              std::to_string(t_count) + " < " + std::to_string(n_ctrl) + ")");
  if (!all_finite(chunk.actions))
    throw std::invalid_argument("fit_least_squares: non-finite action entries");

  KnotVector kv = KnotVector::clamped_uniform(n_ctrl, degree, 0.0, 1.0);
  const auto params = uniform_params(t_count);

  Matrix design(t_count, n_ctrl);
  double basis[kMaxDegree + 1];
  for (int t = 0; t < t_count; ++t) {
    const int span = kv.find_span(params[t]);
    nonzero_basis(kv, span, params[t], basis);
    for (int r = 0; r <= degree; ++r) design(t, span - degree + r) = basis[r];
  }

  Matrix ctrl = lstsq_householder(std::move(design), chunk.actions);
  BSplineCurve curve(std::move(kv), std::move(ctrl));
  const double residual = curve_residual(curve, chunk.actions, params);
  return FitResult{std::move(curve), residual};
}

}  // namespace trajflow
