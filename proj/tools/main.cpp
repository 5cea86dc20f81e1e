#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajflow/errors.hpp"
#include "trajflow/experiments.hpp"
#include "trajflow/io.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace trajflow;

// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Declarative config layer: a flat JSON document whose keys mirror the long
// option names; command-line flags override file values; unknown keys and
// type mismatches are collected and reported together.
class SubConfig {
 public:
  explicit SubConfig(CLI::App* cmd) : cmd_(cmd) {
    cmd->add_option("--config", config_path_,
                    "flat JSON config file; command-line flags override");
  }

  template <typename T>
  void add(const std::string& flag, T& var, const std::string& desc) {
    CLI::Option* opt = cmd_->add_option(flag, var, desc);
    entries_[flag.substr(2)] = Entry{
        opt,
        [&var](const json& v) {
          try {
            var = v.get<T>();
            return true;
          } catch (...) {
            return false;
          }
        },
        [&var]() { return json(var); }};
  }

  // Applies the config file (if any) and returns the resolved snapshot.
  json resolve() {
    if (!config_path_.empty()) {
      if (!fs::exists(config_path_))
        throw UsageError("config file not found: " + config_path_);
      json doc;
      try {
        doc = io::read_json_file(config_path_);
      } catch (const std::exception& e) {
        throw UsageError(std::string("cannot parse config file: ") + e.what());
      }
      if (!doc.is_object()) throw UsageError("config file must be a flat JSON object");

      std::vector<std::string> errors;
      for (const auto& [key, value] : doc.items()) {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
          errors.push_back("unknown config key: " + key);
          continue;
        }
        if (it->second.option->count() > 0) continue;  // flag wins
        if (!it->second.set(value))
          errors.push_back("config key '" + key + "' has the wrong type");
      }
      if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const std::string& e : errors) msg += "\n  - " + e;
        throw UsageError(msg);
      }
    }
    json resolved;
    for (const auto& [key, entry] : entries_) resolved[key] = entry.get();
    return resolved;
  }

 private:
  struct Entry {
    CLI::Option* option;
    std::function<bool(const json&)> set;
    std::function<json()> get;
  };
  CLI::App* cmd_;
  std::string config_path_;
  std::map<std::string, Entry> entries_;
};

fs::path resolve_out_dir(const std::string& out) {
  fs::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv("TRAJFLOW_OUT_ROOT")) p = fs::path(root) / p;
  }
  return p;
}

void write_snapshot(const fs::path& out_dir, const std::string& subcommand,
                    json resolved) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " +
                             ec.message());
  resolved["subcommand"] = subcommand;
  io::write_json_file(out_dir / "config.json", resolved);
}

void require_input(const fs::path& path, const char* what) {
  if (!fs::exists(path))
    throw UsageError(std::string(what) + " not found: " + path.string());
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string input;
  std::string out = "fit_out";
  int n_ctrl = 8;
  int degree = 3;
};

int cmd_fit(const FitArgs& args, json resolved) {
  require_input(args.input, "input CSV");
  const fs::path out_dir = resolve_out_dir(args.out);
  write_snapshot(out_dir, "fit", std::move(resolved));

  const Matrix values = io::read_trajectory_csv(args.input);
  const ActionChunk chunk{values, kDefaultDt};
  const FitResult fit = fit_least_squares(chunk, args.n_ctrl, args.degree);

  json curve_doc = io::curve_to_json(fit.curve);
  io::write_json_file(out_dir / "curve.json", curve_doc);

  json report;
  report["input"] = args.input;
  report["input_digest"] = io::file_digest(args.input);
  report["ticks"] = chunk.ticks();
  report["dims"] = chunk.dims();
  report["n_ctrl"] = args.n_ctrl;
  report["degree"] = args.degree;
  report["residual"] = fit.residual;
  io::write_json_file(out_dir / "fit_report.json", report);

  std::cout << "residual " << io::format_double(fit.residual) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gen-demos

struct GenDemosArgs {
  std::string out;
  int episodes = 100;
  std::string mode = "dynamic";
  uint64_t seed = 0;
  double noise_sigma = 0.03;
  int horizon = 300;
  double control_rate = 30.0;
  double rotation_period = 10.0;
};

int cmd_gen_demos(const GenDemosArgs& args, json resolved) {
  const fs::path out_dir = resolve_out_dir(args.out);
  write_snapshot(out_dir, "gen-demos", std::move(resolved));

  DemoGenConfig cfg;
  cfg.episodes = args.episodes;
  cfg.mode = args.mode;
  cfg.base.seed = args.seed;
  cfg.base.noise_sigma = args.noise_sigma;
  cfg.base.horizon = args.horizon;
  cfg.base.control_rate = args.control_rate;
  cfg.base.rotation_period = args.rotation_period;

  const DemoManifest manifest = generate_demos(cfg, out_dir);
  std::cout << "episodes " << manifest.episodes << " chunks " << manifest.chunk_count
            << " expert_success " << manifest.success_count << "/" << manifest.episodes
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string demos;
  std::string out = "train_out";
  int steps = 2000;
  int batch = 64;
  double lr = 1e-3;
  uint64_t seed = 0;
  int history = 8;
  int future = 32;
  int n_ctrl = 8;
  int degree = 3;
  std::vector<int> hidden = {256, 256, 256};
};

int cmd_train(const TrainArgs& args, json resolved) {
  require_input(fs::path(args.demos) / "manifest.json", "demo manifest");
  const fs::path out_dir = resolve_out_dir(args.out);
  write_snapshot(out_dir, "train", std::move(resolved));

  experiments::TrainRunConfig cfg;
  cfg.spec = BiapChunkSpec{args.history, args.future, args.n_ctrl, args.degree};
  cfg.train.steps = args.steps;
  cfg.train.batch = args.batch;
  cfg.train.learning_rate = args.lr;
  cfg.train.seed = args.seed;
  cfg.hidden = args.hidden;

  const json summary = experiments::train_on_demos(args.demos, out_dir, cfg);
  std::cout << "trained " << summary["steps"] << " steps, loss "
            << io::format_double(summary["initial_loss"].get<double>()) << " -> "
            << io::format_double(summary["final_loss"].get<double>()) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench-repr

struct BenchReprArgs {
  std::string demos;
  std::string out = "repr_out";
  int chunks = 200;
  int chunk_len = 40;
  uint64_t seed = 0;
  int bins = 256;
  int coeffs = 8;
  int n_ctrl = 8;
  int degree = 3;
};

int cmd_bench_repr(const BenchReprArgs& args, json resolved) {
  require_input(fs::path(args.demos) / "manifest.json", "demo manifest");
  const fs::path out_dir = resolve_out_dir(args.out);
  write_snapshot(out_dir, "bench-repr", std::move(resolved));

  experiments::ReprBenchConfig cfg;
  cfg.chunks = args.chunks;
  cfg.chunk_len = args.chunk_len;
  cfg.seed = args.seed;
  cfg.params = CodecParams{args.bins, args.coeffs, args.n_ctrl, args.degree};

  const json doc = experiments::bench_repr(args.demos, out_dir, cfg);
  for (const json& entry : doc["codecs"])
    std::cout << entry["codec"].get<std::string>() << " mean_abs_error "
              << io::format_double(entry["mean_abs_error"].get<double>()) << " snr_db "
              << entry["snr_db"].dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bench-smooth

struct BenchSmoothArgs {
  std::string demos;
  std::string out = "smooth_out";
  int trials = 100;
  int chunk_len = 40;
  double noise_frac = 0.05;
  int n_ctrl = 8;
  int degree = 3;
  uint64_t seed = 0;
};

int cmd_bench_smooth(const BenchSmoothArgs& args, json resolved) {
  require_input(fs::path(args.demos) / "manifest.json", "demo manifest");
  const fs::path out_dir = resolve_out_dir(args.out);
  write_snapshot(out_dir, "bench-smooth", std::move(resolved));

  experiments::SmoothBenchConfig cfg;
  cfg.trials = args.trials;
  cfg.chunk_len = args.chunk_len;
  cfg.noise_frac = args.noise_frac;
  cfg.n_ctrl = args.n_ctrl;
  cfg.degree = args.degree;
  cfg.seed = args.seed;

  const json doc = experiments::bench_smooth(args.demos, out_dir, cfg);
  std::cout << "median ZCR reduction "
            << io::format_double(doc["median_zcr_reduction_pct"].get<double>())
            << "% median Acc p95 reduction "
            << io::format_double(doc["median_acc_p95_reduction_pct"].get<double>()) << "%\n";
  return 0;
}

// ---------------------------------------------------------------------------
// run-sim

struct RunSimArgs {
  std::string model;
  std::string out = "sim_out";
  std::string mode = "async";
  std::string task = "dynamic";
  std::string refit = "on";
  int latency_ticks = 3;
  int episodes = 20;
  uint64_t seed = 0;
  int horizon = 300;
  int denoise_steps = 10;
  double control_rate = 30.0;
  double rotation_period = 10.0;
};

int cmd_run_sim(const RunSimArgs& args, json resolved) {
  require_input(args.model, "model artifact");
  if (args.refit != "on" && args.refit != "off")
    throw UsageError("--refit must be 'on' or 'off'");
  const fs::path out_dir = resolve_out_dir(args.out);
  write_snapshot(out_dir, "run-sim", std::move(resolved));

  experiments::SimRunConfig cfg;
  cfg.exec_mode = args.mode;
  cfg.refit_on = args.refit == "on";
  cfg.latency_ticks = args.latency_ticks;
  cfg.episodes = args.episodes;
  cfg.denoise_steps = args.denoise_steps;
  cfg.base.mode = task_mode_from_name(args.task);
  cfg.base.seed = args.seed;
  cfg.base.horizon = args.horizon;
  cfg.base.control_rate = args.control_rate;
  cfg.base.rotation_period = args.rotation_period;

  const json doc = experiments::run_sim(args.model, out_dir, cfg);
  std::cout << args.mode << "/" << args.task << " success "
            << doc["success_count"].get<int>() << "/" << args.episodes
            << " mean_completion " << io::format_double(
                   doc["mean_completion_ticks"].get<double>())
            << " mean_tracking_error "
            << io::format_double(doc["mean_tracking_error"].get<double>())
            << " mean_boundary_discontinuity "
            << io::format_double(doc["mean_boundary_discontinuity"].get<double>()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajflow: B-spline action-chunk policies with asynchronous execution"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand("fit", "least-squares B-spline fit of a trajectory CSV");
  SubConfig fit_cfg(fit_cmd);
  fit_cfg.add("--input", fit_args.input, "trajectory CSV to fit");
  fit_cfg.add("--out", fit_args.out, "output directory");
  fit_cfg.add("--n-ctrl", fit_args.n_ctrl, "control points per dimension");
  fit_cfg.add("--degree", fit_args.degree, "spline degree");

  GenDemosArgs demos_args;
  CLI::App* demos_cmd = app.add_subcommand("gen-demos", "generate scripted-expert demonstrations");
  SubConfig demos_cfg(demos_cmd);
  demos_cfg.add("--out", demos_args.out, "output demo directory");
  demos_cfg.add("--episodes", demos_args.episodes, "number of episodes");
  demos_cfg.add("--mode", demos_args.mode, "dynamic | static | mixed");
  demos_cfg.add("--seed", demos_args.seed, "base seed (episode i uses seed+i)");
  demos_cfg.add("--noise-sigma", demos_args.noise_sigma, "expert action noise scale");
  demos_cfg.add("--horizon", demos_args.horizon, "episode length in ticks");
  demos_cfg.add("--control-rate", demos_args.control_rate, "control rate in Hz");
  demos_cfg.add("--rotation-period", demos_args.rotation_period,
                "dynamic-target revolution period in seconds");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train the flow-matching policy on demos");
  SubConfig train_cfg(train_cmd);
  train_cfg.add("--demos", train_args.demos, "demo directory");
  train_cfg.add("--out", train_args.out, "output directory");
  train_cfg.add("--steps", train_args.steps, "gradient steps");
  train_cfg.add("--batch", train_args.batch, "minibatch size");
  train_cfg.add("--lr", train_args.lr, "learning rate");
  train_cfg.add("--seed", train_args.seed, "training seed");
  train_cfg.add("--history", train_args.history, "chunk history steps");
  train_cfg.add("--future", train_args.future, "chunk future steps");
  train_cfg.add("--n-ctrl", train_args.n_ctrl, "control points per chunk");
  train_cfg.add("--degree", train_args.degree, "spline degree");
  train_cfg.add("--hidden", train_args.hidden, "hidden layer widths");

  BenchReprArgs repr_args;
  CLI::App* repr_cmd = app.add_subcommand("bench-repr", "score the four action-chunk codecs");
  SubConfig repr_cfg(repr_cmd);
  repr_cfg.add("--demos", repr_args.demos, "demo directory");
  repr_cfg.add("--out", repr_args.out, "output directory");
  repr_cfg.add("--chunks", repr_args.chunks, "number of sampled chunks");
  repr_cfg.add("--chunk-len", repr_args.chunk_len, "chunk length in ticks");
  repr_cfg.add("--seed", repr_args.seed, "sampling seed");
  repr_cfg.add("--bins", repr_args.bins, "quantization bins");
  repr_cfg.add("--coeffs", repr_args.coeffs, "retained DCT coefficients");
  repr_cfg.add("--n-ctrl", repr_args.n_ctrl, "spline control points");
  repr_cfg.add("--degree", repr_args.degree, "spline degree");

  BenchSmoothArgs smooth_args;
  CLI::App* smooth_cmd =
      app.add_subcommand("bench-smooth", "raw vs splined smoothness on noisy trajectories");
  SubConfig smooth_cfg(smooth_cmd);
  smooth_cfg.add("--demos", smooth_args.demos, "demo directory (smooth base trajectories)");
  smooth_cfg.add("--out", smooth_args.out, "output directory");
  smooth_cfg.add("--trials", smooth_args.trials, "number of seeded trials");
  smooth_cfg.add("--chunk-len", smooth_args.chunk_len, "trajectory length in ticks");
  smooth_cfg.add("--noise-frac", smooth_args.noise_frac,
                 "noise sigma as a fraction of the per-dimension range");
  smooth_cfg.add("--n-ctrl", smooth_args.n_ctrl, "spline control points");
  smooth_cfg.add("--degree", smooth_args.degree, "spline degree");
  smooth_cfg.add("--seed", smooth_args.seed, "trial seed");

  RunSimArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("run-sim", "run the policy in the simulated task");
  SubConfig sim_cfg(sim_cmd);
  sim_cfg.add("--model", sim_args.model, "model artifact (model.json)");
  sim_cfg.add("--out", sim_args.out, "output directory");
  sim_cfg.add("--mode", sim_args.mode, "sync | async");
  sim_cfg.add("--task", sim_args.task, "dynamic | static");
  sim_cfg.add("--refit", sim_args.refit, "splice refitting: on | off");
  sim_cfg.add("--latency-ticks", sim_args.latency_ticks, "inference latency in ticks");
  sim_cfg.add("--episodes", sim_args.episodes, "number of seeded episodes");
  sim_cfg.add("--seed", sim_args.seed, "base seed (episode i uses seed+i)");
  sim_cfg.add("--horizon", sim_args.horizon, "episode length in ticks");
  sim_cfg.add("--denoise-steps", sim_args.denoise_steps, "flow integration steps");
  sim_cfg.add("--control-rate", sim_args.control_rate, "control rate in Hz");
  sim_cfg.add("--rotation-period", sim_args.rotation_period,
              "dynamic-target revolution period in seconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(fit_cmd)) return cmd_fit(fit_args, fit_cfg.resolve());
    if (app.got_subcommand(demos_cmd)) return cmd_gen_demos(demos_args, demos_cfg.resolve());
    if (app.got_subcommand(train_cmd)) return cmd_train(train_args, train_cfg.resolve());
    if (app.got_subcommand(repr_cmd)) return cmd_bench_repr(repr_args, repr_cfg.resolve());
    if (app.got_subcommand(smooth_cmd))
      return cmd_bench_smooth(smooth_args, smooth_cfg.resolve());
    if (app.got_subcommand(sim_cmd)) return cmd_run_sim(sim_args, sim_cfg.resolve());
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
