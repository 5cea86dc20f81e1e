#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trajflow/matrix.hpp"
#include "trajflow/rng.hpp"

namespace trajflow {

// Planar first-order plant pursuing a (possibly rotating) target.
// Actions are velocity commands plus an absolute gripper aperture:
//   action = [vx, vy, gripper], gripper in [0, 1] (0 = closed).
inline constexpr int kActionDims = 3;

// Flattened state row used in files and observations: px, py, gripper, tx, ty.
inline constexpr int kStateDims = 5;

enum class TaskMode { static_target, dynamic_target };

std::string_view task_mode_name(TaskMode mode);
TaskMode task_mode_from_name(std::string_view name);

struct Workspace {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};
  double diagonal() const {
    const double dx = hi[0] - lo[0], dy = hi[1] - lo[1];
    return std::sqrt(dx * dx + dy * dy);
  }
};

struct EpisodeConfig {
  TaskMode mode = TaskMode::dynamic_target;
  double rotation_period = 10.0;  // seconds per revolution (dynamic mode)
  double control_rate = 30.0;     // Hz
  int horizon = 300;              // ticks
  Workspace workspace;
  double noise_sigma = 0.03;  // expert velocity-command noise, action units
  uint64_t seed = 0;

  std::array<double, 2> target_center{0.5, 0.5};
  double target_radius = 0.3;        // dynamic-mode circle radius
  double static_spawn_extent = 0.1;  // static target offset box half-size

  double max_speed = 1.0;    // workspace units per second
  double expert_gain = 12.0;  // pursuit gain, 1/s

  double success_radius_frac = 0.02;  // of the workspace diagonal
  int success_dwell = 15;             // consecutive in-radius ticks

  double dt() const { return 1.0 / control_rate; }
  double success_radius() const { return success_radius_frac * workspace.diagonal(); }
  void validate() const;
};

struct PlantState {
  std::array<double, 2> position{};
  std::array<double, 2> velocity{};  // last commanded velocity
  double gripper = 0.0;
  std::array<double, 2> target_position{};
  double target_phase = 0.0;  // radians, dynamic mode
  int tick = 0;
};

std::array<double, 2> target_at_phase(const EpisodeConfig& cfg, double phase);
PlantState initial_state(const EpisodeConfig& cfg, RngStream& rng);
PlantState step(const PlantState& state, std::span<const double> action,
                const EpisodeConfig& cfg);

// Proportional pursuit with smooth speed saturation; leads a rotating target
// by one control interval and closes the gripper on arrival. Adds zero-mean
// noise of scale noise_sigma.
std::vector<double> expert_action(const PlantState& state, const EpisodeConfig& cfg,
                                  RngStream& rng);

void state_row(const PlantState& state, double* out);  // kStateDims entries

// One executed episode: states has horizon+1 rows (state before each tick,
// then the final state), actions has horizon rows.
struct Rollout {
  Matrix states;
  Matrix actions;
  double dt = 0.0;
};

Rollout run_expert_episode(const EpisodeConfig& cfg);

// True iff the last success_dwell states are all within success_radius of
// the concurrent target.
bool success(const Matrix& states, const EpisodeConfig& cfg);

// First state index whose trailing dwell window is entirely in radius;
// horizon when the criterion is never met.
int completion_ticks(const Matrix& states, const EpisodeConfig& cfg);

double mean_tracking_error(const Matrix& states);

// Observation features: the last kFrames state rows and action rows,
// flattened oldest to newest; shorter histories repeat the earliest state
// and use zero actions.
class ObservationEncoder {
 public:
  static constexpr int kFrames = 8;
  int dims() const { return kFrames * (kStateDims + kActionDims); }
  // states: rows [0, state_count) with state_count >= 1 (current tick last);
  // actions: rows [0, action_count) dispatched before the current tick.
  void encode(const Matrix& states, int state_count, const Matrix& actions,
              int action_count, double* out) const;
  std::vector<double> encode(const Matrix& states, int state_count,
                             const Matrix& actions, int action_count) const;
};

// Demo dataset generation: manifest.json plus one trajectory CSV per
// episode (action columns then state columns). "mixed" alternates dynamic
// and static episodes.
struct DemoGenConfig {
  EpisodeConfig base;
  int episodes = 100;
  std::string mode = "dynamic";  // dynamic | static | mixed
  int window_history = 8;        // recorded in the manifest chunk count
  int window_future = 32;
};

struct DemoManifest {
  int episodes = 0;
  int chunk_count = 0;
  int success_count = 0;
  std::vector<uint64_t> seeds;
};

DemoManifest generate_demos(const DemoGenConfig& cfg,
                            const std::filesystem::path& out_dir);

struct LoadedDemos {
  std::vector<Rollout> rollouts;
  std::vector<uint64_t> seeds;
  double dt = 0.0;
  int action_dims = 0;
  int state_dims = 0;
};

LoadedDemos load_demos(const std::filesystem::path& dir);

}  // namespace trajflow
