#pragma once

#include <vector>

#include "trajflow/matrix.hpp"

namespace trajflow {

inline constexpr double kDefaultDt = 1.0 / 30.0;  // 30 Hz control rate

// A discrete action sequence: T rows of D action dimensions, sampled at a
// fixed control rate.
struct ActionChunk {
  Matrix actions;            // T x D
  double dt = kDefaultDt;

  int ticks() const noexcept { return actions.rows(); }
  int dims() const noexcept { return actions.cols(); }
};

// Clamped (open-uniform) knot vector: the first and last degree+1 knots
// repeat, interior knots partition the domain evenly.
class KnotVector {
 public:
  KnotVector(std::vector<double> knots, int degree);

  static KnotVector clamped_uniform(int n_ctrl, int degree, double lo, double hi);

  int degree() const noexcept { return degree_; }
  int n_ctrl() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  int size() const noexcept { return static_cast<int>(knots_.size()); }
  double operator[](int i) const { return knots_[i]; }
  const std::vector<double>& values() const noexcept { return knots_; }

  double domain_min() const { return knots_[degree_]; }
  double domain_max() const { return knots_[n_ctrl()]; }
  bool in_domain(double u) const { return u >= domain_min() && u <= domain_max(); }

  // Index s with knots[s] <= u < knots[s+1], clamped to the last nonempty
  // span at the right domain end. u must be in the domain.
  int find_span(double u) const;

 private:
  std::vector<double> knots_;
  int degree_;
};

// make_clamped_knots of the module contract.
KnotVector make_clamped_knots(int n_ctrl, int degree, double lo, double hi);

// Single Cox-de Boor basis function N_{i,p}(u) with the 0/0 := 0 convention;
// the final basis function evaluates to 1 at the clamped right endpoint.
// Reference-path evaluation: eval() uses the span-local algorithm instead.
double basis_function(const KnotVector& kv, int i, int p, double u);

// All degree+1 basis functions that are nonzero on the span containing u,
// written to out[0..degree]; out[r] = N_{span-degree+r, degree}(u).
void nonzero_basis(const KnotVector& kv, int span, double u, double* out);

class BSplineCurve {
 public:
  BSplineCurve(KnotVector knots, Matrix control_points);

  const KnotVector& knots() const noexcept { return knots_; }
  const Matrix& control_points() const noexcept { return points_; }
  int degree() const noexcept { return knots_.degree(); }
  int n_ctrl() const noexcept { return points_.rows(); }
  int dims() const noexcept { return points_.cols(); }
  double domain_min() const { return knots_.domain_min(); }
  double domain_max() const { return knots_.domain_max(); }

  std::vector<double> eval(double u) const;
  void eval_into(double u, double* out) const;  // out has dims() entries

  // Spline of degree p-order whose evaluation is the order-th derivative.
  BSplineCurve derivative(int order = 1) const;

  // Evaluate at n_samples parameters evenly spaced across the domain.
  ActionChunk reconstruct(int n_samples, double dt = kDefaultDt) const;

 private:
  KnotVector knots_;
  Matrix points_;
};

struct FitResult {
  BSplineCurve curve;
  double residual;  // sum over samples and dimensions of squared error
};

// Least-squares fit of a discrete action sequence by a clamped B-spline on
// the normalized domain [0, 1]; row t maps to u_t = t / (T - 1). One shared
// design matrix, one QR factorization, D right-hand sides.
FitResult fit_least_squares(const ActionChunk& chunk, int n_ctrl, int degree);

// Sum of squared errors of the curve against target rows at given parameters.
double curve_residual(const BSplineCurve& curve, const Matrix& targets,
                      const std::vector<double>& params);

// Parameters u_t = lo + t*(hi-lo)/(count-1) used throughout for uniform ticks.
std::vector<double> uniform_params(int count, double lo = 0.0, double hi = 1.0);

}  // namespace trajflow
