#include "trajflow/codecs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "trajflow/errors.hpp"

namespace trajflow {

std::string_view codec_name(CodecKind kind) {
  switch (kind) {
    case CodecKind::bins256: return "bins256";
    case CodecKind::dct8: return "dct8";
    case CodecKind::bspline_discrete: return "bspline_discrete";
    case CodecKind::bspline_continuous: return "bspline_continuous";
  }
  return "unknown";
}

Codec::Codec(CodecKind kind, CodecParams params) : kind_(kind), params_(params) {
  if (params_.bins < 2) throw std::invalid_argument("Codec: need at least 2 bins");
  if (params_.coeffs < 1) throw std::invalid_argument("Codec: need at least 1 coefficient");
  if (params_.n_ctrl < params_.degree + 1)
    throw std::invalid_argument("Codec: need n_ctrl >= degree + 1");
}

bool Codec::needs_calibration() const noexcept {
  return kind_ == CodecKind::bins256 || kind_ == CodecKind::bspline_discrete;
}

namespace {

// Mid-rise uniform quantizer over [lo, hi]; boundary values fall upward into
// the next bin (round half up), out-of-range values clamp to edge bins.
int quantize(double x, double lo, double hi, int bins) {
  const double w = (hi - lo) / bins;
  const int idx = static_cast<int>(std::floor((x - lo) / w));
  return std::clamp(idx, 0, bins - 1);
}

double dequantize(int idx, double lo, double hi, int bins) {
  const double w = (hi - lo) / bins;
  return lo + (idx + 0.5) * w;
}

void expand_range(Calibration& cal, const Matrix& values) {
  const int d = values.cols();
  if (!cal.valid()) {
    cal.lo.assign(d, std::numeric_limits<double>::infinity());
    cal.hi.assign(d, -std::numeric_limits<double>::infinity());
  }
  if (cal.dims() != d) throw std::invalid_argument("calibrate: dimension mismatch");
  for (int r = 0; r < values.rows(); ++r)
    for (int c = 0; c < d; ++c) {
      cal.lo[c] = std::min(cal.lo[c], values(r, c));
      cal.hi[c] = std::max(cal.hi[c], values(r, c));
    }
}

void check_ranges(Calibration& cal) {
  for (int c = 0; c < cal.dims(); ++c) {
    if (!(cal.hi[c] > cal.lo[c])) {
      // Constant dimension: widen symmetrically so the quantizer stays sane.
      const double pad = std::max(1e-9, 1e-9 * std::abs(cal.lo[c]));
      cal.lo[c] -= pad;
      cal.hi[c] += pad;
    }
  }
}

}  // namespace

void Codec::calibrate(const std::vector<ActionChunk>& dataset) {
  if (!needs_calibration()) return;
  if (dataset.empty()) throw std::invalid_argument("calibrate: empty dataset");
  Calibration cal;
  for (const ActionChunk& chunk : dataset) {
    if (kind_ == CodecKind::bins256) {
      expand_range(cal, chunk.actions);
    } else {
      const FitResult fit = fit_least_squares(chunk, params_.n_ctrl, params_.degree);
      expand_range(cal, fit.curve.control_points());
    }
  }
  check_ranges(cal);
  calibration_ = std::move(cal);
}

std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(n);
  const double norm0 = std::sqrt(1.0 / n);
  const double norm = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int t = 0; t < n; ++t)
      acc += x[t] * std::cos(std::numbers::pi * (t + 0.5) * k / n);
    out[k] = (k == 0 ? norm0 : norm) * acc;
  }
  return out;
}

std::vector<double> idct2_orthonormal(std::span<const double> coeffs, int n) {
  const int m = static_cast<int>(coeffs.size());
  if (m > n) throw std::invalid_argument("idct2: more coefficients than samples");
  std::vector<double> out(n, 0.0);
  const double norm0 = std::sqrt(1.0 / n);
  const double norm = std::sqrt(2.0 / n);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k)
      acc += (k == 0 ? norm0 : norm) * coeffs[k] *
             std::cos(std::numbers::pi * (t + 0.5) * k / n);
    out[t] = acc;
  }
  return out;
}

std::vector<double> Codec::encode(const ActionChunk& chunk) const {
  if (needs_calibration() && !calibrated())
    throw InvalidStateError("encode: codec not calibrated");
  const int t_count = chunk.ticks();
  const int d = chunk.dims();

  switch (kind_) {
    case CodecKind::bins256: {
      if (calibration_.dims() != d)
        throw std::invalid_argument("encode: dimension mismatch with calibration");
      std::vector<double> code(static_cast<size_t>(t_count) * d);
      for (int t = 0; t < t_count; ++t)
        for (int c = 0; c < d; ++c)
          code[static_cast<size_t>(t) * d + c] = quantize(
              chunk.actions(t, c), calibration_.lo[c], calibration_.hi[c], params_.bins);
      return code;
    }
    case CodecKind::dct8: {
      std::vector<double> code(static_cast<size_t>(params_.coeffs) * d);
      std::vector<double> column(t_count);
      for (int c = 0; c < d; ++c) {
        for (int t = 0; t < t_count; ++t) column[t] = chunk.actions(t, c);
        const auto spectrum = dct2_orthonormal(column);
        const int keep = std::min(params_.coeffs, t_count);
        for (int k = 0; k < params_.coeffs; ++k)
          code[static_cast<size_t>(k) * d + c] = k < keep ? spectrum[k] : 0.0;
      }
      return code;
    }
    case CodecKind::bspline_discrete:
    case CodecKind::bspline_continuous: {
      const FitResult fit = fit_least_squares(chunk, params_.n_ctrl, params_.degree);
      const Matrix& ctrl = fit.curve.control_points();
      std::vector<double> code(static_cast<size_t>(params_.n_ctrl) * d);
      for (int i = 0; i < params_.n_ctrl; ++i)
        for (int c = 0; c < d; ++c) {
          double v = ctrl(i, c);
          if (kind_ == CodecKind::bspline_discrete) {
            if (calibration_.dims() != d)
              throw std::invalid_argument("encode: dimension mismatch with calibration");
            v = quantize(v, calibration_.lo[c], calibration_.hi[c], params_.bins);
          }
          code[static_cast<size_t>(i) * d + c] = v;
        }
      return code;
    }
  }
  throw std::logic_error("encode: unknown codec kind");
}

ActionChunk Codec::decode(const std::vector<double>& code, int ticks, int dims,
                          double dt) const {
  if (ticks < 2) throw std::invalid_argument("decode: need ticks >= 2");
  if (dims < 1) throw std::invalid_argument("decode: need dims >= 1");

  switch (kind_) {
    case CodecKind::bins256: {
      if (static_cast<int>(code.size()) != ticks * dims)
        throw std::invalid_argument("decode: code size mismatch");
      if (calibration_.dims() != dims)
        throw std::invalid_argument("decode: dimension mismatch with calibration");
      Matrix out(ticks, dims);
      for (int t = 0; t < ticks; ++t)
        for (int c = 0; c < dims; ++c)
          out(t, c) = dequantize(static_cast<int>(code[static_cast<size_t>(t) * dims + c]),
                                 calibration_.lo[c], calibration_.hi[c], params_.bins);
      return ActionChunk{std::move(out), dt};
    }
    case CodecKind::dct8: {
      if (static_cast<int>(code.size()) != params_.coeffs * dims)
        throw std::invalid_argument("decode: code size mismatch");
      Matrix out(ticks, dims);
      std::vector<double> spectrum(params_.coeffs);
      for (int c = 0; c < dims; ++c) {
        for (int k = 0; k < params_.coeffs; ++k)
          spectrum[k] = code[static_cast<size_t>(k) * dims + c];
        const auto column = idct2_orthonormal(spectrum, ticks);
        for (int t = 0; t < ticks; ++t) out(t, c) = column[t];
      }
      return ActionChunk{std::move(out), dt};
    }
    case CodecKind::bspline_discrete:
    case CodecKind::bspline_continuous: {
      if (static_cast<int>(code.size()) != params_.n_ctrl * dims)
        throw std::invalid_argument("decode: code size mismatch");
      Matrix ctrl(params_.n_ctrl, dims);
      for (int i = 0; i < params_.n_ctrl; ++i)
        for (int c = 0; c < dims; ++c) {
          double v = code[static_cast<size_t>(i) * dims + c];
          if (kind_ == CodecKind::bspline_discrete) {
            if (calibration_.dims() != dims)
              throw std::invalid_argument("decode: dimension mismatch with calibration");
            v = dequantize(static_cast<int>(v), calibration_.lo[c], calibration_.hi[c],
                           params_.bins);
          }
          ctrl(i, c) = v;
        }
      BSplineCurve curve(KnotVector::clamped_uniform(params_.n_ctrl, params_.degree, 0.0, 1.0),
                         std::move(ctrl));
      return curve.reconstruct(ticks, dt);
    }
  }
  throw std::logic_error("decode: unknown codec kind");
}

ActionChunk Codec::roundtrip(const ActionChunk& chunk) const {
  return decode(encode(chunk), chunk.ticks(), chunk.dims(), chunk.dt);
}

ReprScore score(const Codec& codec, const std::vector<ActionChunk>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("score: empty dataset");
  double abs_sum = 0.0, err_power = 0.0, sig_power = 0.0;
  size_t count = 0;
  for (const ActionChunk& chunk : dataset) {
    const ActionChunk rec = codec.roundtrip(chunk);
    for (int t = 0; t < chunk.ticks(); ++t)
      for (int c = 0; c < chunk.dims(); ++c) {
        const double a = chunk.actions(t, c);
        const double e = a - rec.actions(t, c);
        abs_sum += std::abs(e);
        err_power += e * e;
        sig_power += a * a;
        ++count;
      }
  }
  ReprScore s;
  s.mean_abs_error = abs_sum / count;
  s.rms_error = std::sqrt(err_power / count);
  s.snr_db = err_power == 0.0 ? std::numeric_limits<double>::infinity()
                              : 10.0 * std::log10(sig_power / err_power);
  return s;
}

}  // namespace trajflow
