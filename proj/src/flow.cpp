#include "trajflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "trajflow/errors.hpp"
#include "trajflow/kernels.hpp"

namespace trajflow {

using nlohmann::json;

void BiapChunkSpec::validate() const {
  if (history < 1 || future < 1)
    throw std::invalid_argument("BiapChunkSpec: history and future must be >= 1");
  if (degree < 0) throw std::invalid_argument("BiapChunkSpec: negative degree");
  if (n_ctrl < degree + 1)
    throw std::invalid_argument("BiapChunkSpec: need n_ctrl >= degree + 1");
  if (chunk_len() < n_ctrl)
    throw std::invalid_argument("BiapChunkSpec: need history + future >= n_ctrl");
}

ActionChunk make_biap_chunk(const ActionChunk& traj, int t, const BiapChunkSpec& spec) {
  spec.validate();
  if (t - spec.history < 0 || t + spec.future > traj.ticks())
    throw std::invalid_argument("make_biap_chunk: window [" +
                                std::to_string(t - spec.history) + ", " +
                                std::to_string(t + spec.future) + ") out of range");
  Matrix window(spec.chunk_len(), traj.dims());
  for (int r = 0; r < spec.chunk_len(); ++r)
    window.set_row(r, traj.actions.row_span(t - spec.history + r));
  return ActionChunk{std::move(window), traj.dt};
}

Matrix chunk_targets(const ActionChunk& chunk, const BiapChunkSpec& spec) {
  spec.validate();
  if (chunk.ticks() != spec.chunk_len())
    throw std::invalid_argument("chunk_targets: chunk length must equal history + future");
  return fit_least_squares(chunk, spec.n_ctrl, spec.degree).curve.control_points();
}

FlowSample flow_sample_at(const Matrix& c_star, Matrix z, double tau) {
  if (!z.same_shape(c_star)) throw std::invalid_argument("flow_sample: shape mismatch");
  FlowSample s;
  s.tau = tau;
  s.c_tau = Matrix(c_star.rows(), c_star.cols());
  s.target = Matrix(c_star.rows(), c_star.cols());
  for (size_t i = 0; i < c_star.size(); ++i) {
    s.c_tau.data()[i] = (1.0 - tau) * z.data()[i] + tau * c_star.data()[i];
    s.target.data()[i] = c_star.data()[i] - z.data()[i];
  }
  s.z = std::move(z);
  return s;
}

FlowSample flow_sample(const Matrix& c_star, RngStream& rng) {
  Matrix z(c_star.rows(), c_star.cols());
  for (size_t i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  const double tau = rng.uniform();
  return flow_sample_at(c_star, std::move(z), tau);
}

void tau_embedding(double tau, double* out) {
  for (int k = 0; k < kTauEmbedDim / 2; ++k) {
    const double freq = std::numbers::pi * static_cast<double>(1 << k);
    out[2 * k] = std::sin(freq * tau);
    out[2 * k + 1] = std::cos(freq * tau);
  }
}

int policy_input_dim(int n_ctrl, int action_dims, int obs_dim) {
  return n_ctrl * action_dims + kTauEmbedDim + obs_dim;
}

void build_policy_input(const Matrix& c_tau, double tau, std::span<const double> obs,
                        double* out) {
  std::copy(c_tau.data(), c_tau.data() + c_tau.size(), out);
  tau_embedding(tau, out + c_tau.size());
  std::copy(obs.begin(), obs.end(), out + c_tau.size() + kTauEmbedDim);
}

VectorFieldNet::VectorFieldNet(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2)
    throw std::invalid_argument("VectorFieldNet: need at least input and output widths");
  for (int w : widths_)
    if (w < 1) throw std::invalid_argument("VectorFieldNet: widths must be positive");
  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    weights_.emplace_back(widths_[l], widths_[l + 1]);
    biases_.emplace_back(widths_[l + 1], 0.0);
  }
}

void VectorFieldNet::init_params(RngStream& rng) {
  for (size_t l = 0; l < weights_.size(); ++l) {
    Matrix& w = weights_[l];
    const double limit = std::sqrt(6.0 / (w.rows() + w.cols()));
    for (size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
    std::fill(biases_[l].begin(), biases_[l].end(), 0.0);
  }
}

size_t VectorFieldNet::param_count() const noexcept {
  size_t n = 0;
  for (size_t l = 0; l < weights_.size(); ++l)
    n += weights_[l].size() + biases_[l].size();
  return n;
}

std::vector<double*> VectorFieldNet::param_blocks() {
  std::vector<double*> blocks;
  for (size_t l = 0; l < weights_.size(); ++l) {
    blocks.push_back(weights_[l].data());
    blocks.push_back(biases_[l].data());
  }
  return blocks;
}

std::vector<size_t> VectorFieldNet::param_block_sizes() const {
  std::vector<size_t> sizes;
  for (size_t l = 0; l < weights_.size(); ++l) {
    sizes.push_back(weights_[l].size());
    sizes.push_back(biases_[l].size());
  }
  return sizes;
}

std::vector<double> VectorFieldNet::flatten_params() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (size_t l = 0; l < weights_.size(); ++l) {
    flat.insert(flat.end(), weights_[l].data(), weights_[l].data() + weights_[l].size());
    flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
  }
  return flat;
}

void VectorFieldNet::set_params(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("set_params: size mismatch");
  size_t off = 0;
  for (size_t l = 0; l < weights_.size(); ++l) {
    std::copy(flat.begin() + off, flat.begin() + off + weights_[l].size(),
              weights_[l].data());
    off += weights_[l].size();
    std::copy(flat.begin() + off, flat.begin() + off + biases_[l].size(),
              biases_[l].begin());
    off += biases_[l].size();
  }
}

namespace {

// z = x * W + b, row-major batched.
void linear_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    Matrix& z) {
  z = Matrix(x.rows(), w.cols());
  kernels::matmul_nn(x.data(), w.data(), z.data(), x.rows(), x.cols(), w.cols());
  for (int r = 0; r < z.rows(); ++r) {
    double* row = z.row(r);
    for (int c = 0; c < z.cols(); ++c) row[c] += b[c];
  }
}

void tanh_inplace(Matrix& m) {
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = std::tanh(m.data()[i]);
}

}  // namespace

Matrix VectorFieldNet::forward(const Matrix& x) const {
  if (x.cols() != input_dim())
    throw std::invalid_argument("forward: input width mismatch");
  Matrix a = x;
  Matrix z;
  for (int l = 0; l < layer_count(); ++l) {
    linear_forward(a, weights_[l], biases_[l], z);
    if (l + 1 < layer_count()) tanh_inplace(z);
    a = std::move(z);
  }
  return a;
}

std::vector<double> NetGradients::flatten() const {
  std::vector<double> flat;
  for (size_t l = 0; l < weight_grads.size(); ++l) {
    flat.insert(flat.end(), weight_grads[l].data(),
                weight_grads[l].data() + weight_grads[l].size());
    flat.insert(flat.end(), bias_grads[l].begin(), bias_grads[l].end());
  }
  return flat;
}

double mse_loss(const VectorFieldNet& net, const Matrix& x, const Matrix& target,
                NetGradients* grads) {
  if (x.rows() < 1) throw std::invalid_argument("mse_loss: empty batch");
  if (x.cols() != net.input_dim() || target.cols() != net.output_dim() ||
      target.rows() != x.rows())
    throw std::invalid_argument("mse_loss: shape mismatch");

  const int layers = net.layer_count();
  const int batch = x.rows();

  // Forward with cached activations (activations[l] is the input to layer l).
  std::vector<Matrix> activations(layers + 1);
  activations[0] = x;
  for (int l = 0; l < layers; ++l) {
    linear_forward(activations[l], net.weight(l), net.bias(l), activations[l + 1]);
    if (l + 1 < layers) tanh_inplace(activations[l + 1]);
  }

  const Matrix& out = activations[layers];
  Matrix delta(batch, net.output_dim());
  double loss = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    const double e = out.data()[i] - target.data()[i];
    loss += e * e;
    delta.data()[i] = 2.0 * e / batch;
  }
  loss /= batch;
  if (grads == nullptr) return loss;

  grads->weight_grads.assign(layers, Matrix());
  grads->bias_grads.assign(layers, {});
  for (int l = layers - 1; l >= 0; --l) {
    if (l + 1 < layers) {
      // delta currently holds dL/dA_{l+1}; fold in tanh'.
      const Matrix& act = activations[l + 1];
      for (size_t i = 0; i < delta.size(); ++i)
        delta.data()[i] *= 1.0 - act.data()[i] * act.data()[i];
    }
    const Matrix& input = activations[l];
    Matrix dw(input.cols(), delta.cols());
    kernels::matmul_tn(input.data(), delta.data(), dw.data(), input.cols(), batch,
                       delta.cols());
    std::vector<double> db(delta.cols(), 0.0);
    for (int r = 0; r < batch; ++r)
      for (int c = 0; c < delta.cols(); ++c) db[c] += delta(r, c);
    grads->weight_grads[l] = std::move(dw);
    grads->bias_grads[l] = std::move(db);

    if (l > 0) {
      Matrix prev(batch, input.cols());
      kernels::matmul_nt(delta.data(), net.weight(l).data(), prev.data(), batch,
                         delta.cols(), input.cols());
      delta = std::move(prev);
    }
  }
  return loss;
}

double flow_loss(const VectorFieldNet& net, const std::vector<FlowSample>& samples,
                 const Matrix& observations) {
  if (samples.empty()) throw std::invalid_argument("flow_loss: empty batch");
  if (observations.rows() != static_cast<int>(samples.size()))
    throw std::invalid_argument("flow_loss: observation row mismatch");

  const int in_dim = net.input_dim();
  Matrix x(static_cast<int>(samples.size()), in_dim);
  Matrix target(static_cast<int>(samples.size()), net.output_dim());
  for (size_t i = 0; i < samples.size(); ++i) {
    build_policy_input(samples[i].c_tau, samples[i].tau, observations.row_span(i),
                       x.row(static_cast<int>(i)));
    target.set_row(static_cast<int>(i),
                   {samples[i].target.data(), samples[i].target.size()});
  }
  return mse_loss(net, x, target);
}

Normalization Normalization::identity(int dims) {
  Normalization n;
  n.mean.assign(dims, 0.0);
  n.stdev.assign(dims, 1.0);
  return n;
}

Normalization Normalization::fit(const Matrix& rows) {
  if (rows.rows() < 1) throw std::invalid_argument("Normalization::fit: empty input");
  const int d = rows.cols();
  Normalization n;
  n.mean.assign(d, 0.0);
  n.stdev.assign(d, 0.0);
  for (int r = 0; r < rows.rows(); ++r)
    for (int c = 0; c < d; ++c) n.mean[c] += rows(r, c);
  for (int c = 0; c < d; ++c) n.mean[c] /= rows.rows();
  for (int r = 0; r < rows.rows(); ++r)
    for (int c = 0; c < d; ++c) {
      const double e = rows(r, c) - n.mean[c];
      n.stdev[c] += e * e;
    }
  for (int c = 0; c < d; ++c) {
    n.stdev[c] = std::sqrt(n.stdev[c] / rows.rows());
    if (n.stdev[c] < 1e-8) n.stdev[c] = 1.0;  // constant coordinate
  }
  return n;
}

void Normalization::apply(Matrix& rows) const {
  if (rows.cols() != static_cast<int>(mean.size()))
    throw std::invalid_argument("Normalization::apply: width mismatch");
  for (int r = 0; r < rows.rows(); ++r)
    for (int c = 0; c < rows.cols(); ++c)
      rows(r, c) = (rows(r, c) - mean[c]) / stdev[c];
}

void Normalization::invert(std::span<double> row) const {
  if (row.size() != mean.size())
    throw std::invalid_argument("Normalization::invert: width mismatch");
  for (size_t c = 0; c < row.size(); ++c) row[c] = row[c] * stdev[c] + mean[c];
}

namespace {

// Draws one flow-matching batch (inputs and regression targets) from the
// dataset using the given stream.
void draw_batch(const Matrix& observations, const Matrix& targets_std, int batch,
                RngStream& rng, Matrix& x, Matrix& target, Matrix& c_tau) {
  const int rows = observations.rows();
  const int n_coords = targets_std.cols();
  for (int b = 0; b < batch; ++b) {
    const int idx = rng.uniform_int(0, rows - 1);
    const double* c_star = targets_std.row(idx);
    const double tau = rng.uniform();
    double* trow = target.row(b);
    for (int c = 0; c < n_coords; ++c) {
      const double z = rng.normal();
      c_tau.data()[c] = (1.0 - tau) * z + tau * c_star[c];
      trow[c] = c_star[c] - z;
    }
    build_policy_input(c_tau, tau, observations.row_span(idx), x.row(b));
  }
}

}  // namespace

TrainingTrace train(VectorFieldNet& net, const Matrix& observations,
                    const Matrix& targets_std, const TrainConfig& cfg) {
  if (observations.rows() < 1) throw std::invalid_argument("train: empty dataset");
  if (observations.rows() != targets_std.rows())
    throw std::invalid_argument("train: observation/target row mismatch");
  if (cfg.steps < 0 || cfg.batch < 1) throw std::invalid_argument("train: bad config");

  const int n_coords = targets_std.cols();
  RngStream rng = RngStream::derive(cfg.seed, "train");

  // The recorded loss curve is measured on one fixed held-out batch so it
  // tracks the parameters, not the per-step sampling noise: entry 0 is the
  // pre-training loss, entry k the loss after the k-th update.
  Matrix x_eval(cfg.batch, net.input_dim());
  Matrix target_eval(cfg.batch, n_coords);
  Matrix c_tau(1, n_coords);
  {
    RngStream eval_rng = RngStream::derive(cfg.seed, "train-eval");
    draw_batch(observations, targets_std, cfg.batch, eval_rng, x_eval, target_eval, c_tau);
  }

  // Adam state over all parameter blocks.
  auto blocks = net.param_blocks();
  const auto sizes = net.param_block_sizes();
  const size_t total = net.param_count();
  std::vector<double> m(total, 0.0), v(total, 0.0);

  Matrix x(cfg.batch, net.input_dim());
  Matrix target(cfg.batch, n_coords);
  TrainingTrace trace;
  trace.loss.reserve(cfg.steps + 1);
  trace.loss.push_back(mse_loss(net, x_eval, target_eval));
  NetGradients grads;

  for (int step = 0; step < cfg.steps; ++step) {
    draw_batch(observations, targets_std, cfg.batch, rng, x, target, c_tau);
    const double step_loss = mse_loss(net, x, target, &grads);
    if (!std::isfinite(step_loss))
      throw TrainingError("train: non-finite loss at step " + std::to_string(step), step);

    if (cfg.learning_rate != 0.0) {
      const std::vector<double> flat_grads = grads.flatten();
      const double bc1 = 1.0 - std::pow(cfg.beta1, step + 1);
      const double bc2 = 1.0 - std::pow(cfg.beta2, step + 1);
      size_t off = 0;
      for (size_t blk = 0; blk < blocks.size(); ++blk) {
        double* params = blocks[blk];
        for (size_t i = 0; i < sizes[blk]; ++i, ++off) {
          const double g = flat_grads[off];
          m[off] = cfg.beta1 * m[off] + (1.0 - cfg.beta1) * g;
          v[off] = cfg.beta2 * v[off] + (1.0 - cfg.beta2) * g * g;
          const double mhat = m[off] / bc1;
          const double vhat = v[off] / bc2;
          params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
      }
    }

    const double eval_loss = mse_loss(net, x_eval, target_eval);
    if (!std::isfinite(eval_loss))
      throw TrainingError("train: non-finite loss at step " + std::to_string(step), step);
    trace.loss.push_back(eval_loss);
  }
  return trace;
}

Matrix sample_control_points(const VectorFieldNet& net, std::span<const double> obs,
                             int n_steps, int n_ctrl, int action_dims,
                             const Normalization& norm, RngStream& rng) {
  if (n_steps < 1) throw std::invalid_argument("sample: need n_steps >= 1");
  const int n_coords = n_ctrl * action_dims;
  if (net.output_dim() != n_coords)
    throw std::invalid_argument("sample: net output width mismatch");

  Matrix c(1, n_coords);
  for (int i = 0; i < n_coords; ++i) c.data()[i] = rng.normal();

  Matrix x(1, net.input_dim());
  for (int k = 0; k < n_steps; ++k) {
    const double tau = static_cast<double>(k) / n_steps;
    build_policy_input(c, tau, obs, x.row(0));
    const Matrix field = net.forward(x);
    for (int i = 0; i < n_coords; ++i) {
      c.data()[i] += field.data()[i] / n_steps;
      if (!std::isfinite(c.data()[i]))
        throw SamplingError("sample: non-finite state at integration step " +
                            std::to_string(k));
    }
  }

  norm.invert({c.data(), static_cast<size_t>(n_coords)});
  Matrix points(n_ctrl, action_dims);
  std::copy(c.data(), c.data() + n_coords, points.data());
  return points;
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c)
      throw std::invalid_argument("model artifact: ragged matrix");
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

void save_model(const FlowModel& model, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "trajflow-model-v1";
  doc["widths"] = model.net.widths();
  doc["obs_dim"] = model.obs_dim;
  doc["action_dims"] = model.action_dims;
  doc["dt"] = model.dt;
  doc["train_seed"] = model.train_seed;
  doc["chunk"] = {{"history", model.spec.history},
                  {"future", model.spec.future},
                  {"n_ctrl", model.spec.n_ctrl},
                  {"degree", model.spec.degree}};
  doc["norm"] = {{"mean", model.norm.mean}, {"stdev", model.norm.stdev}};
  json layers = json::array();
  for (int l = 0; l < model.net.layer_count(); ++l)
    layers.push_back({{"w", matrix_to_json(model.net.weight(l))},
                      {"b", model.net.bias(l)}});
  doc["layers"] = std::move(layers);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model: cannot open " + path.string());
  out << doc.dump(1) << '\n';
}

FlowModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
  json doc = json::parse(in);
  if (doc.value("format", "") != "trajflow-model-v1")
    throw std::runtime_error("load_model: unrecognized artifact format in " + path.string());

  FlowModel model{VectorFieldNet(doc["widths"].get<std::vector<int>>()),
                  Normalization{},
                  BiapChunkSpec{},
                  doc["obs_dim"].get<int>(),
                  doc["action_dims"].get<int>(),
                  doc["dt"].get<double>(),
                  doc["train_seed"].get<uint64_t>()};
  model.spec.history = doc["chunk"]["history"].get<int>();
  model.spec.future = doc["chunk"]["future"].get<int>();
  model.spec.n_ctrl = doc["chunk"]["n_ctrl"].get<int>();
  model.spec.degree = doc["chunk"]["degree"].get<int>();
  model.norm.mean = doc["norm"]["mean"].get<std::vector<double>>();
  model.norm.stdev = doc["norm"]["stdev"].get<std::vector<double>>();

  const json& layers = doc["layers"];
  if (static_cast<int>(layers.size()) != model.net.layer_count())
    throw std::runtime_error("load_model: layer count mismatch");
  for (int l = 0; l < model.net.layer_count(); ++l) {
    Matrix w = matrix_from_json(layers[l]["w"]);
    if (!w.same_shape(model.net.weight(l)))
      throw std::runtime_error("load_model: layer shape mismatch");
    model.net.weight(l) = std::move(w);
    model.net.bias(l) = layers[l]["b"].get<std::vector<double>>();
  }
  return model;
}

BSplineCurve predict_curve(const FlowModel& model, std::span<const double> obs,
                           int n_steps, RngStream& rng) {
  Matrix points = sample_control_points(model.net, obs, n_steps, model.spec.n_ctrl,
                                        model.action_dims, model.norm, rng);
  return BSplineCurve(
      KnotVector::clamped_uniform(model.spec.n_ctrl, model.spec.degree, 0.0, 1.0),
      std::move(points));
}

}  // namespace trajflow
