#pragma once

#include <memory>
#include <span>
#include <vector>

#include "trajflow/bspline.hpp"
#include "trajflow/flow.hpp"
#include "trajflow/refit.hpp"
#include "trajflow/sim.hpp"

namespace trajflow {

// A chunk-producing policy. predict() is called once per inference
// generation with the observation captured when that inference began.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int action_dims() const = 0;
  virtual BiapChunkSpec chunk_spec() const = 0;
  virtual BSplineCurve predict(std::span<const double> obs, int generation) = 0;
};

// Flow-matching policy over a loaded model artifact. Draws per-generation
// noise from streams derived from the episode seed, so traces are
// reproducible.
class FlowPolicy : public Policy {
 public:
  FlowPolicy(const FlowModel* model, int denoise_steps, uint64_t episode_seed);
  int action_dims() const override { return model_->action_dims; }
  BiapChunkSpec chunk_spec() const override { return model_->spec; }
  BSplineCurve predict(std::span<const double> obs, int generation) override;

 private:
  const FlowModel* model_;
  int denoise_steps_;
  uint64_t episode_seed_;
};

// Inference delay in control ticks. Fixed latency is deterministic;
// seeded jitter draws once per inference.
struct LatencyModel {
  enum class Kind { fixed, seeded_jitter };
  Kind kind = Kind::fixed;
  double mean_seconds = 0.090;
  double jitter_seconds = 0.0;

  int ticks(double dt, RngStream& rng) const;  // ceil(seconds / dt), >= 0
  static LatencyModel fixed_ticks(int ticks, double dt);
};

struct ExecOptions {
  bool refit_enabled = true;
  double refit_lambda = kDefaultRefitLambda;
};

// Timestamped record of what the executor actually dispatched.
struct ExecutionTrace {
  Matrix actions;                 // horizon x D
  Matrix states;                  // (horizon+1) x kStateDims
  std::vector<int> generation;    // producing generation per tick
  std::vector<uint8_t> splice;    // 1 where a splice was applied at the tick boundary
  std::vector<uint8_t> stall;     // 1 for sync stop-and-go hold ticks
  std::vector<double> splice_discontinuity;  // one entry per splice event
  double dt = 0.0;
};

struct EpisodeResult {
  ExecutionTrace trace;
  bool success = false;
  int completion_ticks = 0;
  double mean_tracking_error = 0.0;
  double mean_boundary_discontinuity = 0.0;  // 0 when no boundary events
  int splice_count = 0;
  int stall_tick_count = 0;
};

// Asynchronous loop: the executor dispatches one queued action every tick
// while inference runs in the background; each finished inference is
// refitted against the actions executed during its delay and spliced in at
// the next tick boundary, which immediately starts the next inference.
// Throws StarvationError when the queue cannot cover a tick.
EpisodeResult run_async(Policy& policy, const EpisodeConfig& cfg,
                        const LatencyModel& latency, const ExecOptions& opts = {});

// Stop-and-go baseline: the arm holds position while inference runs (the
// world keeps moving), then the chunk's future half is executed in full.
EpisodeResult run_sync(Policy& policy, const EpisodeConfig& cfg,
                       const LatencyModel& latency);

}  // namespace trajflow
