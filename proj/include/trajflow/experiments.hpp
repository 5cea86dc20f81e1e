#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajflow/codecs.hpp"
#include "trajflow/exec.hpp"
#include "trajflow/flow.hpp"
#include "trajflow/sim.hpp"

// End-to-end experiment drivers: everything here reads declared inputs,
// writes its artifacts plus a resolved-config snapshot into an output
// directory, and returns the summary document it wrote.

namespace trajflow::experiments {

struct TrainDataset {
  Matrix observations;
  Matrix targets_std;
  Normalization norm;
  int action_dims = 0;
  double dt = 0.0;
};

// Sliding BiAP windows over demo episodes: control-point targets fitted per
// window and standardized per coordinate, observations from the shared
// encoder at each window anchor.
TrainDataset build_dataset(const LoadedDemos& demos, const BiapChunkSpec& spec);

struct TrainRunConfig {
  BiapChunkSpec spec;
  TrainConfig train;
  std::vector<int> hidden = {256, 256, 256};
};

nlohmann::json train_on_demos(const std::filesystem::path& demos_dir,
                              const std::filesystem::path& out_dir,
                              const TrainRunConfig& cfg);

struct ReprBenchConfig {
  int chunks = 200;
  int chunk_len = 40;
  uint64_t seed = 0;
  CodecParams params;
};

// Scores the four codecs on random windows drawn from a demo directory;
// writes repr_scores.json.
nlohmann::json bench_repr(const std::filesystem::path& demos_dir,
                          const std::filesystem::path& out_dir,
                          const ReprBenchConfig& cfg);

// The window set bench_repr scores; exposed for tests and acceptance.
std::vector<ActionChunk> draw_repr_chunks(const LoadedDemos& demos,
                                          const ReprBenchConfig& cfg);

struct SmoothBenchConfig {
  int trials = 100;
  int chunk_len = 40;
  double noise_frac = 0.05;  // i.i.d. noise sigma as a fraction of per-dim range
  int n_ctrl = 8;
  int degree = 3;
  uint64_t seed = 0;
};

// Raw-vs-splined smoothness over seeded noisy trajectories built from demo
// windows; writes smoothness.json and smoothness.csv (per-dimension rows).
nlohmann::json bench_smooth(const std::filesystem::path& demos_dir,
                            const std::filesystem::path& out_dir,
                            const SmoothBenchConfig& cfg);

struct SimRunConfig {
  EpisodeConfig base;               // base.seed is the first episode seed
  std::string exec_mode = "async";  // sync | async
  bool refit_on = true;
  int latency_ticks = 3;
  int episodes = 20;
  int denoise_steps = 10;
};

// Runs seeded episodes under one execution mode; writes trace_<seed>.csv per
// episode and summary.json.
nlohmann::json run_sim(const std::filesystem::path& model_path,
                       const std::filesystem::path& out_dir, const SimRunConfig& cfg);

std::string trace_csv(const ExecutionTrace& trace);

}  // namespace trajflow::experiments
