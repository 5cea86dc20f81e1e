#pragma once

#include <string_view>
#include <vector>

#include "trajflow/bspline.hpp"

namespace trajflow {

// Lossy action-chunk codecs benchmarked against each other:
//   bins256            per-element uniform quantization of the raw actions
//   dct8               truncation to the lowest-frequency DCT-II coefficients
//   bspline_discrete   fitted control points, then per-dimension quantization
//   bspline_continuous fitted control points kept at full precision
enum class CodecKind { bins256, dct8, bspline_discrete, bspline_continuous };

std::string_view codec_name(CodecKind kind);

struct CodecParams {
  int bins = 256;      // quantization levels (bins256, bspline_discrete)
  int coeffs = 8;      // retained DCT coefficients
  int n_ctrl = 8;      // spline control points per dimension
  int degree = 3;
};

// Per-dimension [min, max] quantization range, learned from a dataset.
struct Calibration {
  std::vector<double> lo, hi;
  bool valid() const noexcept { return !lo.empty() && lo.size() == hi.size(); }
  int dims() const noexcept { return static_cast<int>(lo.size()); }
};

class Codec {
 public:
  explicit Codec(CodecKind kind, CodecParams params = {});

  CodecKind kind() const noexcept { return kind_; }
  const CodecParams& params() const noexcept { return params_; }
  bool needs_calibration() const noexcept;
  bool calibrated() const noexcept { return calibration_.valid(); }
  const Calibration& calibration() const noexcept { return calibration_; }

  // Learns quantization ranges: over raw action values for bins256, over
  // fitted control-point values for bspline_discrete. No-op for the
  // continuous codecs.
  void calibrate(const std::vector<ActionChunk>& dataset);

  std::vector<double> encode(const ActionChunk& chunk) const;
  ActionChunk decode(const std::vector<double>& code, int ticks, int dims,
                     double dt = kDefaultDt) const;

  ActionChunk roundtrip(const ActionChunk& chunk) const;

 private:
  CodecKind kind_;
  CodecParams params_;
  Calibration calibration_;
};

struct ReprScore {
  double mean_abs_error = 0.0;
  double rms_error = 0.0;
  double snr_db = 0.0;  // +infinity when the reconstruction is exact
};

// Pooled reconstruction fidelity over a dataset: grand mean absolute error
// over every element, and SNR = 10*log10(sum a^2 / sum (a - ahat)^2) pooled
// over all chunks.
ReprScore score(const Codec& codec, const std::vector<ActionChunk>& dataset);

// Orthonormal DCT-II of one signal (length n in, n out), and its inverse
// (DCT-III). Exposed for tests; the codec truncates the spectrum.
std::vector<double> dct2_orthonormal(std::span<const double> x);
std::vector<double> idct2_orthonormal(std::span<const double> coeffs, int n);

}  // namespace trajflow
