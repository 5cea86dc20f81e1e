#include "trajflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "trajflow/io.hpp"

namespace trajflow {

using nlohmann::json;

std::string_view task_mode_name(TaskMode mode) {
  return mode == TaskMode::dynamic_target ? "dynamic" : "static";
}

TaskMode task_mode_from_name(std::string_view name) {
  if (name == "dynamic") return TaskMode::dynamic_target;
  if (name == "static") return TaskMode::static_target;
  throw std::invalid_argument("unknown task mode: " + std::string(name));
}

void EpisodeConfig::validate() const {
  if (!(rotation_period > 0.0))
    throw std::invalid_argument("EpisodeConfig: rotation_period must be positive");
  if (!(control_rate > 0.0))
    throw std::invalid_argument("EpisodeConfig: control_rate must be positive");
  if (horizon < 1) throw std::invalid_argument("EpisodeConfig: horizon must be >= 1");
  if (!(workspace.hi[0] > workspace.lo[0] && workspace.hi[1] > workspace.lo[1]))
    throw std::invalid_argument("EpisodeConfig: degenerate workspace");
  if (noise_sigma < 0.0)
    throw std::invalid_argument("EpisodeConfig: negative noise_sigma");
  if (success_dwell < 1)
    throw std::invalid_argument("EpisodeConfig: success_dwell must be >= 1");
}

std::array<double, 2> target_at_phase(const EpisodeConfig& cfg, double phase) {
  return {cfg.target_center[0] + cfg.target_radius * std::cos(phase),
          cfg.target_center[1] + cfg.target_radius * std::sin(phase)};
}

PlantState initial_state(const EpisodeConfig& cfg, RngStream& rng) {
  cfg.validate();
  PlantState s;
  // Spawn away from the workspace edge so pursuit has room.
  const double margin = 0.05;
  for (int i = 0; i < 2; ++i) {
    const double lo = cfg.workspace.lo[i], hi = cfg.workspace.hi[i];
    s.position[i] = rng.uniform(lo + margin * (hi - lo), hi - margin * (hi - lo));
  }
  s.gripper = 1.0;  // starts open
  if (cfg.mode == TaskMode::dynamic_target) {
    s.target_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.target_position = target_at_phase(cfg, s.target_phase);
  } else {
    s.target_phase = 0.0;
    for (int i = 0; i < 2; ++i)
      s.target_position[i] =
          cfg.target_center[i] + rng.uniform(-cfg.static_spawn_extent, cfg.static_spawn_extent);
  }
  return s;
}

PlantState step(const PlantState& state, std::span<const double> action,
                const EpisodeConfig& cfg) {
  if (action.size() != kActionDims) throw std::invalid_argument("step: bad action size");
  for (double a : action)
    if (!std::isfinite(a)) throw std::invalid_argument("step: non-finite action");

  const double dt = cfg.dt();
  PlantState next = state;
  for (int i = 0; i < 2; ++i) {
    next.velocity[i] = action[i];
    next.position[i] = std::clamp(state.position[i] + action[i] * dt, cfg.workspace.lo[i],
                                  cfg.workspace.hi[i]);
  }
  next.gripper = std::clamp(action[2], 0.0, 1.0);
  if (cfg.mode == TaskMode::dynamic_target) {
    next.target_phase = state.target_phase + 2.0 * std::numbers::pi * dt / cfg.rotation_period;
    next.target_position = target_at_phase(cfg, next.target_phase);
  }
  next.tick = state.tick + 1;
  return next;
}

std::vector<double> expert_action(const PlantState& state, const EpisodeConfig& cfg,
                                  RngStream& rng) {
  // Pursue the target one control interval ahead so a rotating target is
  // intercepted rather than chased.
  std::array<double, 2> goal = state.target_position;
  if (cfg.mode == TaskMode::dynamic_target) {
    const double lead_phase =
        state.target_phase + 2.0 * std::numbers::pi * cfg.dt() / cfg.rotation_period;
    goal = target_at_phase(cfg, lead_phase);
  }

  const double ex = goal[0] - state.position[0];
  const double ey = goal[1] - state.position[1];
  const double dist = std::sqrt(ex * ex + ey * ey);

  std::vector<double> action(kActionDims, 0.0);
  if (dist > 0.0) {
    // Smooth speed scheduling: proportional near the target, saturated far.
    const double speed = cfg.max_speed * std::tanh(cfg.expert_gain * dist / cfg.max_speed);
    action[0] = speed * ex / dist;
    action[1] = speed * ey / dist;
  }
  // Aperture command: open in transit, closing smoothly on approach. The
  // 0.15 length scale keeps the transition slow at the control rate, so the
  // command profile stays well inside the cubic-spline space.
  const double close_scale = 0.15;
  const double ratio = dist / close_scale;
  action[2] = 1.0 - std::exp(-ratio * ratio);

  action[0] += cfg.noise_sigma * rng.normal();
  action[1] += cfg.noise_sigma * rng.normal();
  action[2] += 0.5 * cfg.noise_sigma * rng.normal();
  return action;
}

void state_row(const PlantState& state, double* out) {
  out[0] = state.position[0];
  out[1] = state.position[1];
  out[2] = state.gripper;
  out[3] = state.target_position[0];
  out[4] = state.target_position[1];
}

Rollout run_expert_episode(const EpisodeConfig& cfg) {
  cfg.validate();
  RngStream init_rng = RngStream::derive(cfg.seed, "init");
  RngStream expert_rng = RngStream::derive(cfg.seed, "expert");

  Rollout rollout;
  rollout.dt = cfg.dt();
  rollout.states = Matrix(cfg.horizon + 1, kStateDims);
  rollout.actions = Matrix(cfg.horizon, kActionDims);

  PlantState state = initial_state(cfg, init_rng);
  state_row(state, rollout.states.row(0));
  for (int t = 0; t < cfg.horizon; ++t) {
    const auto action = expert_action(state, cfg, expert_rng);
    rollout.actions.set_row(t, action);
    state = step(state, action, cfg);
    state_row(state, rollout.states.row(t + 1));
  }
  return rollout;
}

namespace {

double tracking_error_at(const Matrix& states, int row) {
  const double dx = states(row, 0) - states(row, 3);
  const double dy = states(row, 1) - states(row, 4);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

bool success(const Matrix& states, const EpisodeConfig& cfg) {
  const int rows = states.rows();
  const int dwell = cfg.success_dwell;
  if (rows < dwell) return false;
  const double radius = cfg.success_radius();
  for (int r = rows - dwell; r < rows; ++r)
    if (tracking_error_at(states, r) > radius) return false;
  return true;
}

int completion_ticks(const Matrix& states, const EpisodeConfig& cfg) {
  const int rows = states.rows();
  const int dwell = cfg.success_dwell;
  const double radius = cfg.success_radius();
  int run = 0;
  for (int r = 0; r < rows; ++r) {
    run = tracking_error_at(states, r) <= radius ? run + 1 : 0;
    if (run >= dwell) return r;
  }
  return rows - 1;  // the horizon
}

double mean_tracking_error(const Matrix& states) {
  double sum = 0.0;
  for (int r = 0; r < states.rows(); ++r) sum += tracking_error_at(states, r);
  return states.rows() > 0 ? sum / states.rows() : 0.0;
}

void ObservationEncoder::encode(const Matrix& states, int state_count,
                                const Matrix& actions, int action_count,
                                double* out) const {
  if (state_count < 1) throw std::invalid_argument("encode: need at least one state");
  if (state_count > states.rows() || action_count > actions.rows())
    throw std::invalid_argument("encode: count exceeds rows");

  double* cursor = out;
  for (int f = 0; f < kFrames; ++f) {
    const int idx = std::max(0, state_count - kFrames + f);
    const double* row = states.row(idx);
    cursor = std::copy(row, row + kStateDims, cursor);
  }
  for (int f = 0; f < kFrames; ++f) {
    const int idx = action_count - kFrames + f;
    if (idx < 0) {
      cursor = std::fill_n(cursor, kActionDims, 0.0);
    } else {
      const double* row = actions.row(idx);
      cursor = std::copy(row, row + kActionDims, cursor);
    }
  }
}

std::vector<double> ObservationEncoder::encode(const Matrix& states, int state_count,
                                               const Matrix& actions,
                                               int action_count) const {
  std::vector<double> out(dims());
  encode(states, state_count, actions, action_count, out.data());
  return out;
}

DemoManifest generate_demos(const DemoGenConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.episodes < 1) throw std::invalid_argument("generate_demos: need episodes >= 1");
  if (cfg.mode != "dynamic" && cfg.mode != "static" && cfg.mode != "mixed")
    throw std::invalid_argument("generate_demos: mode must be dynamic, static or mixed");
  cfg.base.validate();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("generate_demos: cannot create " + out_dir.string() +
                                   ": " + ec.message());

  const int window = cfg.window_history + cfg.window_future;
  DemoManifest manifest;
  json episodes = json::array();

  for (int i = 0; i < cfg.episodes; ++i) {
    EpisodeConfig ep = cfg.base;
    ep.seed = cfg.base.seed + static_cast<uint64_t>(i);
    if (cfg.mode == "mixed")
      ep.mode = (i % 2 == 0) ? TaskMode::dynamic_target : TaskMode::static_target;
    else
      ep.mode = task_mode_from_name(cfg.mode);

    const Rollout rollout = run_expert_episode(ep);

    // Action columns first, then state columns, one row per tick.
    Matrix table(ep.horizon, kActionDims + kStateDims);
    for (int t = 0; t < ep.horizon; ++t) {
      for (int c = 0; c < kActionDims; ++c) table(t, c) = rollout.actions(t, c);
      for (int c = 0; c < kStateDims; ++c) table(t, kActionDims + c) = rollout.states(t, c);
    }
    const std::string filename = "ep_" + std::to_string(ep.seed) + ".csv";
    io::write_trajectory_csv(out_dir / filename, table);

    const bool ok = success(rollout.states, ep);
    manifest.success_count += ok ? 1 : 0;
    manifest.chunk_count += std::max(0, ep.horizon - window + 1);
    manifest.seeds.push_back(ep.seed);
    episodes.push_back({{"seed", ep.seed},
                        {"file", filename},
                        {"mode", std::string(task_mode_name(ep.mode))},
                        {"ticks", ep.horizon},
                        {"success", ok},
                        {"digest", io::file_digest(out_dir / filename)}});
  }
  manifest.episodes = cfg.episodes;

  json doc;
  doc["format"] = "trajflow-demos-v1";
  doc["action_dims"] = kActionDims;
  doc["state_dims"] = kStateDims;
  doc["control_rate"] = cfg.base.control_rate;
  doc["mode"] = cfg.mode;
  doc["noise_sigma"] = cfg.base.noise_sigma;
  doc["base_seed"] = cfg.base.seed;
  doc["window_history"] = cfg.window_history;
  doc["window_future"] = cfg.window_future;
  doc["chunk_count"] = manifest.chunk_count;
  doc["success_count"] = manifest.success_count;
  doc["episodes"] = std::move(episodes);
  io::write_json_file(out_dir / "manifest.json", doc);
  return manifest;
}

LoadedDemos load_demos(const std::filesystem::path& dir) {
  const json doc = io::read_json_file(dir / "manifest.json");
  if (doc.value("format", "") != "trajflow-demos-v1")
    throw std::runtime_error("load_demos: unrecognized manifest in " + dir.string());

  LoadedDemos out;
  out.action_dims = doc.at("action_dims").get<int>();
  out.state_dims = doc.at("state_dims").get<int>();
  const double rate = doc.at("control_rate").get<double>();
  out.dt = 1.0 / rate;

  for (const json& ep : doc.at("episodes")) {
    const Matrix table = io::read_trajectory_csv(dir / ep.at("file").get<std::string>());
    if (table.cols() != out.action_dims + out.state_dims)
      throw std::runtime_error("load_demos: column mismatch in " +
                               ep.at("file").get<std::string>());
    Rollout rollout;
    rollout.dt = out.dt;
    rollout.actions = Matrix(table.rows(), out.action_dims);
    rollout.states = Matrix(table.rows(), out.state_dims);
    for (int t = 0; t < table.rows(); ++t) {
      for (int c = 0; c < out.action_dims; ++c) rollout.actions(t, c) = table(t, c);
      for (int c = 0; c < out.state_dims; ++c)
        rollout.states(t, c) = table(t, out.action_dims + c);
    }
    out.rollouts.push_back(std::move(rollout));
    out.seeds.push_back(ep.at("seed").get<uint64_t>());
  }
  if (out.rollouts.empty()) throw std::runtime_error("load_demos: no episodes in " + dir.string());
  return out;
}

}  // namespace trajflow
