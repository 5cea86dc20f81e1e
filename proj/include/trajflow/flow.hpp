#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "trajflow/bspline.hpp"
#include "trajflow/matrix.hpp"
#include "trajflow/rng.hpp"

namespace trajflow {

// Chunk layout for bidirectional action prediction: a window of `history`
// past steps and `future` steps ahead, compressed to n_ctrl control points.
struct BiapChunkSpec {
  int history = 8;
  int future = 32;
  int n_ctrl = 8;
  int degree = 3;

  int chunk_len() const noexcept { return history + future; }
  void validate() const;
};

// Rows [t - history, t + future) of a trajectory. Boundary windows are the
// caller's problem: out-of-range windows throw rather than pad.
ActionChunk make_biap_chunk(const ActionChunk& traj, int t, const BiapChunkSpec& spec);

// Control-point regression target of one chunk (n_ctrl x D).
Matrix chunk_targets(const ActionChunk& chunk, const BiapChunkSpec& spec);

// One draw of the linear interpolation path between noise and data:
// c_tau = (1 - tau) z + tau c_star, regression target c_star - z.
struct FlowSample {
  Matrix z;
  double tau = 0.0;
  Matrix c_tau;
  Matrix target;
};

FlowSample flow_sample(const Matrix& c_star, RngStream& rng);
FlowSample flow_sample_at(const Matrix& c_star, Matrix z, double tau);

inline constexpr int kTauEmbedDim = 16;
void tau_embedding(double tau, double* out);  // kTauEmbedDim sinusoids

// Feed-forward vector-field network: linear layers with tanh between them,
// identity output. Input = [flattened c_tau | tau embedding | observation].
class VectorFieldNet {
 public:
  explicit VectorFieldNet(std::vector<int> widths);

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_dim() const noexcept { return widths_.front(); }
  int output_dim() const noexcept { return widths_.back(); }
  int layer_count() const noexcept { return static_cast<int>(weights_.size()); }

  Matrix& weight(int layer) { return weights_[layer]; }
  const Matrix& weight(int layer) const { return weights_[layer]; }
  std::vector<double>& bias(int layer) { return biases_[layer]; }
  const std::vector<double>& bias(int layer) const { return biases_[layer]; }

  void init_params(RngStream& rng);  // Xavier-uniform weights, zero biases

  size_t param_count() const noexcept;
  std::vector<double*> param_blocks();  // weight/bias storage, layer order
  std::vector<size_t> param_block_sizes() const;
  std::vector<double> flatten_params() const;
  void set_params(std::span<const double> flat);

  // Batched forward pass: x is (B x input_dim) -> (B x output_dim).
  Matrix forward(const Matrix& x) const;

 private:
  std::vector<int> widths_;
  std::vector<Matrix> weights_;              // in x out per layer
  std::vector<std::vector<double>> biases_;  // out per layer
};

struct NetGradients {
  std::vector<Matrix> weight_grads;
  std::vector<std::vector<double>> bias_grads;
  std::vector<double> flatten() const;
};

// Mean over the batch of the squared Euclidean distance between the net
// output and target rows. Fills *grads when non-null.
double mse_loss(const VectorFieldNet& net, const Matrix& x, const Matrix& target,
                NetGradients* grads = nullptr);

// Assemble one network input row from a flow sample and an observation.
void build_policy_input(const Matrix& c_tau, double tau, std::span<const double> obs,
                        double* out);
int policy_input_dim(int n_ctrl, int action_dims, int obs_dim);

// Loss of the flow-matching objective over a batch of samples paired with
// observation rows.
double flow_loss(const VectorFieldNet& net, const std::vector<FlowSample>& samples,
                 const Matrix& observations);

// Per-coordinate standardization of the flattened control-point targets.
struct Normalization {
  std::vector<double> mean, stdev;
  static Normalization identity(int dims);
  static Normalization fit(const Matrix& rows);
  void apply(Matrix& rows) const;            // rows -> standardized
  void invert(std::span<double> row) const;  // standardized -> raw
};

struct TrainConfig {
  int steps = 2000;
  int batch = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
};

struct TrainingTrace {
  // Loss on one fixed held-out batch: entry 0 before training, entry k
  // after the k-th update (steps + 1 entries).
  std::vector<double> loss;
};

// Minibatch Adam on the flow-matching objective. observations and
// standardized targets are row-aligned. Deterministic under a fixed seed;
// throws TrainingError at the first non-finite loss.
TrainingTrace train(VectorFieldNet& net, const Matrix& observations,
                    const Matrix& targets_std, const TrainConfig& cfg);

// Euler integration of the learned field from z ~ N(0, I): n_steps updates
// c += net(c, k/n_steps, obs) / n_steps. Returns de-standardized control
// points (n_ctrl x action_dims). Throws SamplingError on non-finite state.
Matrix sample_control_points(const VectorFieldNet& net, std::span<const double> obs,
                             int n_steps, int n_ctrl, int action_dims,
                             const Normalization& norm, RngStream& rng);

// Everything needed to run the policy later: network, normalization,
// chunk layout, and provenance.
struct FlowModel {
  VectorFieldNet net;
  Normalization norm;
  BiapChunkSpec spec;
  int obs_dim = 0;
  int action_dims = 0;
  double dt = kDefaultDt;
  uint64_t train_seed = 0;
};

void save_model(const FlowModel& model, const std::filesystem::path& path);
FlowModel load_model(const std::filesystem::path& path);

// Sample control points and wrap them as a clamped cubic curve on [0, 1].
BSplineCurve predict_curve(const FlowModel& model, std::span<const double> obs,
                           int n_steps, RngStream& rng);

}  // namespace trajflow
