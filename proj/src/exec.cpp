#include "trajflow/exec.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "trajflow/errors.hpp"

namespace trajflow {

FlowPolicy::FlowPolicy(const FlowModel* model, int denoise_steps, uint64_t episode_seed)
    : model_(model), denoise_steps_(denoise_steps), episode_seed_(episode_seed) {
  if (model_ == nullptr) throw std::invalid_argument("FlowPolicy: null model");
  if (denoise_steps_ < 1) throw std::invalid_argument("FlowPolicy: need denoise_steps >= 1");
}

BSplineCurve FlowPolicy::predict(std::span<const double> obs, int generation) {
  RngStream rng = RngStream::derive(episode_seed_, "flow", static_cast<uint64_t>(generation));
  return predict_curve(*model_, obs, denoise_steps_, rng);
}

int LatencyModel::ticks(double dt, RngStream& rng) const {
  double seconds = mean_seconds;
  if (kind == Kind::seeded_jitter) seconds += rng.uniform(-jitter_seconds, jitter_seconds);
  seconds = std::max(seconds, 0.0);
  return static_cast<int>(std::ceil(seconds / dt - 1e-12));
}

LatencyModel LatencyModel::fixed_ticks(int ticks, double dt) {
  if (ticks < 0) throw std::invalid_argument("LatencyModel: negative latency");
  return LatencyModel{Kind::fixed, ticks * dt, 0.0};
}

namespace {

// Pending plan indexed by absolute tick. Splices overwrite a contiguous
// suffix, so coverage is always the interval [0, watermark).
struct ActionQueue {
  Matrix plan;              // horizon x D
  std::vector<int> source;  // producing generation per tick
  int watermark = 0;

  ActionQueue(int horizon, int dims) : plan(horizon, dims), source(horizon, -1) {}

  void splice(int first_tick, const Matrix& samples, int generation) {
    for (int i = 0; i < samples.rows(); ++i) {
      const int tick = first_tick + i;
      if (tick >= plan.rows()) break;
      plan.set_row(tick, samples.row_span(i));
      source[tick] = generation;
    }
    watermark = std::max(watermark, std::min(first_tick + samples.rows(), plan.rows()));
  }
};

struct InFlight {
  int generation;
  int anchor;   // tick whose observation conditioned the prediction
  int done_at;  // tick boundary where the result becomes available
  BSplineCurve curve;
};

double action_distance(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double e = a[i] - b[i];
    sq += e * e;
  }
  return std::sqrt(sq);
}

EpisodeResult summarize(ExecutionTrace trace, const EpisodeConfig& cfg) {
  EpisodeResult result;
  result.success = success(trace.states, cfg);
  result.completion_ticks = completion_ticks(trace.states, cfg);
  result.mean_tracking_error = mean_tracking_error(trace.states);
  result.splice_count = static_cast<int>(trace.splice_discontinuity.size());
  result.stall_tick_count =
      static_cast<int>(std::count(trace.stall.begin(), trace.stall.end(), uint8_t{1}));
  if (!trace.splice_discontinuity.empty()) {
    double sum = 0.0;
    for (double d : trace.splice_discontinuity) sum += d;
    result.mean_boundary_discontinuity = sum / trace.splice_discontinuity.size();
  }
  result.trace = std::move(trace);
  return result;
}

}  // namespace

EpisodeResult run_async(Policy& policy, const EpisodeConfig& cfg,
                        const LatencyModel& latency, const ExecOptions& opts) {
  cfg.validate();
  const BiapChunkSpec spec = policy.chunk_spec();
  spec.validate();
  const int dims = policy.action_dims();
  const int horizon = cfg.horizon;
  const int hist = spec.history;
  const int chunk_len = spec.chunk_len();
  const double dt = cfg.dt();
  const auto chunk_params = uniform_params(chunk_len);

  RngStream init_rng = RngStream::derive(cfg.seed, "init");
  RngStream latency_rng = RngStream::derive(cfg.seed, "latency");
  ObservationEncoder encoder;

  ExecutionTrace trace;
  trace.dt = dt;
  trace.actions = Matrix(horizon, dims);
  trace.states = Matrix(horizon + 1, kStateDims);
  trace.generation.assign(horizon, -1);
  trace.splice.assign(horizon, 0);
  trace.stall.assign(horizon, 0);

  PlantState state = initial_state(cfg, init_rng);
  state_row(state, trace.states.row(0));

  ActionQueue queue(horizon, dims);
  std::vector<double> obs(encoder.dims());

  // Sample the curve of a generation anchored at `anchor` over absolute
  // ticks [first, last): in-chunk index of tick is tick - anchor + history.
  auto sample_window = [&](const BSplineCurve& curve, int anchor, int first, int last) {
    Matrix samples(std::max(0, last - first), dims);
    for (int tick = first; tick < last; ++tick)
      curve.eval_into(chunk_params[tick - anchor + hist], samples.row(tick - first));
    return samples;
  };

  auto observe = [&](int tick) {
    encoder.encode(trace.states, tick + 1, trace.actions, tick, obs.data());
  };

  int generations = 0;
  auto start_inference = [&](int tick) {
    observe(tick);
    const int gen = generations++;
    const int done_at = tick + latency.ticks(dt, latency_rng);
    return InFlight{gen, tick, done_at, policy.predict(obs, gen)};
  };

  // Bootstrap: the first chunk is ready at tick 0 (startup is not part of
  // the stall model), and the next inference starts immediately.
  {
    InFlight first = start_inference(0);
    queue.splice(0, sample_window(first.curve, 0, 0, spec.future), first.generation);
  }
  std::optional<InFlight> inflight = start_inference(0);

  for (int tick = 0; tick < horizon; ++tick) {
    while (inflight && inflight->done_at <= tick) {
      InFlight done = std::move(*inflight);
      inflight.reset();

      const int last_covered = done.anchor + spec.future;  // exclusive
      if (last_covered <= tick)
        throw StarvationError("inference latency exceeded the chunk horizon at tick " +
                                  std::to_string(tick),
                              tick);

      BSplineCurve curve = std::move(done.curve);
      const int hist_len = std::min(hist, tick);
      if (opts.refit_enabled && hist_len > 0) {
        RefitRequest req{std::move(curve), Matrix(hist_len, dims),
                         std::vector<double>(hist_len), 0, opts.refit_lambda};
        for (int i = 0; i < hist_len; ++i) {
          const int t = tick - hist_len + i;
          req.executed_history.set_row(i, trace.actions.row_span(t));
          req.history_params[i] = chunk_params[t - done.anchor + hist];
        }
        req.n_free = default_n_free(req.predicted.knots(), req.history_params.back());
        curve = refit(req).refitted;
      }

      const Matrix samples = sample_window(curve, done.anchor, tick, last_covered);
      if (samples.rows() > 0) {
        queue.splice(tick, samples, done.generation);
        trace.splice[tick] = 1;
        if (tick > 0)
          trace.splice_discontinuity.push_back(
              action_distance(samples.row_span(0), trace.actions.row_span(tick - 1)) / dt);
      }
      // The worker is free again: trigger the next inference at this boundary.
      inflight = start_inference(tick);
      // A finished result is consumed no earlier than the next boundary, so
      // zero latency degenerates to one fresh plan per tick.
      if (inflight->done_at <= tick) inflight->done_at = tick + 1;
    }

    if (tick >= queue.watermark)
      throw StarvationError("action queue underrun at tick " + std::to_string(tick), tick);
    trace.actions.set_row(tick, queue.plan.row_span(tick));
    trace.generation[tick] = queue.source[tick];
    state = step(state, trace.actions.row_span(tick), cfg);
    state_row(state, trace.states.row(tick + 1));
  }

  return summarize(std::move(trace), cfg);
}

EpisodeResult run_sync(Policy& policy, const EpisodeConfig& cfg,
                       const LatencyModel& latency) {
  cfg.validate();
  const BiapChunkSpec spec = policy.chunk_spec();
  spec.validate();
  const int dims = policy.action_dims();
  const int horizon = cfg.horizon;
  const double dt = cfg.dt();
  const auto chunk_params = uniform_params(spec.chunk_len());

  RngStream init_rng = RngStream::derive(cfg.seed, "init");
  RngStream latency_rng = RngStream::derive(cfg.seed, "latency");
  ObservationEncoder encoder;

  ExecutionTrace trace;
  trace.dt = dt;
  trace.actions = Matrix(horizon, dims);
  trace.states = Matrix(horizon + 1, kStateDims);
  trace.generation.assign(horizon, -1);
  trace.splice.assign(horizon, 0);
  trace.stall.assign(horizon, 0);

  PlantState state = initial_state(cfg, init_rng);
  state_row(state, trace.states.row(0));

  std::vector<double> obs(encoder.dims());
  std::vector<double> hold(dims, 0.0);
  std::vector<double> value(dims);

  int tick = 0;
  int generation = 0;
  int last_executed = -1;  // last non-stall tick
  while (tick < horizon) {
    encoder.encode(trace.states, tick + 1, trace.actions, tick, obs.data());
    const BSplineCurve curve = policy.predict(obs, generation);
    const int stall_ticks = latency.ticks(dt, latency_rng);

    // Stop-and-go: the arm holds while the world keeps moving.
    for (int s = 0; s < stall_ticks && tick < horizon; ++s, ++tick) {
      hold[0] = 0.0;
      hold[1] = 0.0;
      hold[2] = state.gripper;
      trace.actions.set_row(tick, hold);
      trace.generation[tick] = generation;
      trace.stall[tick] = 1;
      state = step(state, hold, cfg);
      state_row(state, trace.states.row(tick + 1));
    }

    // Execute the future half of the chunk in full.
    for (int j = 0; j < spec.future && tick < horizon; ++j, ++tick) {
      curve.eval_into(chunk_params[spec.history + j], value.data());
      if (j == 0 && last_executed >= 0)
        trace.splice_discontinuity.push_back(
            action_distance(value, trace.actions.row_span(tick - 1)) / dt);
      trace.actions.set_row(tick, value);
      trace.generation[tick] = generation;
      state = step(state, value, cfg);
      state_row(state, trace.states.row(tick + 1));
      last_executed = tick;
    }
    ++generation;
  }

  return summarize(std::move(trace), cfg);
}

}  // namespace trajflow
