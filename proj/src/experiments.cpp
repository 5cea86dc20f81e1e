#include "trajflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trajflow/io.hpp"
#include "trajflow/metrics.hpp"

namespace trajflow::experiments {

using nlohmann::json;

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

uint64_t matrix_digest(const Matrix& m, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(m.data(), m.size() * sizeof(double), h);
}

}  // namespace

TrainDataset build_dataset(const LoadedDemos& demos, const BiapChunkSpec& spec) {
  spec.validate();
  const ObservationEncoder encoder;
  const int window = spec.chunk_len();

  int total = 0;
  for (const Rollout& r : demos.rollouts)
    total += std::max(0, r.actions.rows() - window + 1);
  if (total == 0) throw std::invalid_argument("build_dataset: no full windows in demos");

  TrainDataset ds;
  ds.action_dims = demos.action_dims;
  ds.dt = demos.dt;
  ds.observations = Matrix(total, encoder.dims());
  Matrix targets(total, spec.n_ctrl * demos.action_dims);

  int row = 0;
  for (const Rollout& r : demos.rollouts) {
    const ActionChunk traj{r.actions, demos.dt};
    const int horizon = r.actions.rows();
    for (int t = spec.history; t + spec.future <= horizon; ++t, ++row) {
      const ActionChunk chunk = make_biap_chunk(traj, t, spec);
      const Matrix ctrl = chunk_targets(chunk, spec);
      std::copy(ctrl.data(), ctrl.data() + ctrl.size(), targets.row(row));
      encoder.encode(r.states, t + 1, r.actions, t, ds.observations.row(row));
    }
  }

  ds.norm = Normalization::fit(targets);
  ds.norm.apply(targets);
  ds.targets_std = std::move(targets);
  return ds;
}

json train_on_demos(const std::filesystem::path& demos_dir,
                    const std::filesystem::path& out_dir, const TrainRunConfig& cfg) {
  ensure_dir(out_dir);
  const LoadedDemos demos = load_demos(demos_dir);
  const TrainDataset ds = build_dataset(demos, cfg.spec);

  std::vector<int> widths;
  widths.push_back(policy_input_dim(cfg.spec.n_ctrl, ds.action_dims,
                                    ds.observations.cols()));
  for (int h : cfg.hidden) widths.push_back(h);
  widths.push_back(cfg.spec.n_ctrl * ds.action_dims);

  VectorFieldNet net(widths);
  RngStream init_rng = RngStream::derive(cfg.train.seed, "net-init");
  net.init_params(init_rng);

  const TrainingTrace trace = train(net, ds.observations, ds.targets_std, cfg.train);

  FlowModel model{std::move(net), ds.norm,       cfg.spec,
                  ds.observations.cols(),         ds.action_dims, ds.dt,
                  cfg.train.seed};
  const auto model_path = out_dir / "model.json";
  save_model(model, model_path);

  std::string curve_csv = "step,loss\n";
  for (size_t i = 0; i < trace.loss.size(); ++i)
    curve_csv += std::to_string(i) + "," + io::format_double(trace.loss[i]) + "\n";
  io::write_text_file(out_dir / "loss_curve.csv", curve_csv);

  json summary;
  summary["demos_dir"] = demos_dir.string();
  summary["demos_digest"] = io::file_digest(demos_dir / "manifest.json");
  summary["dataset_rows"] = ds.observations.rows();
  summary["steps"] = cfg.train.steps;
  summary["initial_loss"] = trace.loss.empty() ? 0.0 : trace.loss.front();
  summary["final_loss"] = trace.loss.empty() ? 0.0 : trace.loss.back();
  summary["model_digest"] = io::file_digest(model_path);
  io::write_json_file(out_dir / "train_summary.json", summary);
  return summary;
}

std::vector<ActionChunk> draw_repr_chunks(const LoadedDemos& demos,
                                          const ReprBenchConfig& cfg) {
  if (cfg.chunks < 1) throw std::invalid_argument("bench_repr: need chunks >= 1");
  RngStream rng = RngStream::derive(cfg.seed, "repr-chunks");
  std::vector<ActionChunk> out;
  out.reserve(cfg.chunks);
  for (int i = 0; i < cfg.chunks; ++i) {
    const Rollout& r =
        demos.rollouts[rng.uniform_int(0, static_cast<int>(demos.rollouts.size()) - 1)];
    if (r.actions.rows() < cfg.chunk_len)
      throw std::invalid_argument("bench_repr: episode shorter than chunk_len");
    const int start = rng.uniform_int(0, r.actions.rows() - cfg.chunk_len);
    Matrix window(cfg.chunk_len, r.actions.cols());
    for (int t = 0; t < cfg.chunk_len; ++t)
      window.set_row(t, r.actions.row_span(start + t));
    out.push_back(ActionChunk{std::move(window), demos.dt});
  }
  return out;
}

json bench_repr(const std::filesystem::path& demos_dir,
                const std::filesystem::path& out_dir, const ReprBenchConfig& cfg) {
  ensure_dir(out_dir);
  const LoadedDemos demos = load_demos(demos_dir);
  const std::vector<ActionChunk> dataset = draw_repr_chunks(demos, cfg);

  uint64_t digest = 0xcbf29ce484222325ull;
  for (const ActionChunk& c : dataset) digest = matrix_digest(c.actions, digest);

  json codecs = json::array();
  for (const CodecKind kind : {CodecKind::bins256, CodecKind::dct8,
                               CodecKind::bspline_discrete, CodecKind::bspline_continuous}) {
    Codec codec(kind, cfg.params);
    codec.calibrate(dataset);
    const ReprScore s = score(codec, dataset);
    json entry;
    entry["codec"] = std::string(codec_name(kind));
    entry["params"] = {{"bins", cfg.params.bins},
                       {"coeffs", cfg.params.coeffs},
                       {"n_ctrl", cfg.params.n_ctrl},
                       {"degree", cfg.params.degree}};
    entry["mean_abs_error"] = s.mean_abs_error;
    entry["rms_error"] = s.rms_error;
    if (std::isfinite(s.snr_db))
      entry["snr_db"] = s.snr_db;
    else
      entry["snr_db"] = "inf";  // lossless reconstruction sentinel
    codecs.push_back(std::move(entry));
  }

  json doc;
  doc["demos_dir"] = demos_dir.string();
  doc["chunks"] = cfg.chunks;
  doc["chunk_len"] = cfg.chunk_len;
  doc["seed"] = cfg.seed;
  doc["dataset_digest"] = digest;
  doc["snr_pooling"] = "pooled over the whole dataset";
  doc["mean_error_definition"] = "mean absolute error per element; rms_error also reported";
  doc["codecs"] = std::move(codecs);
  io::write_json_file(out_dir / "repr_scores.json", doc);
  return doc;
}

json bench_smooth(const std::filesystem::path& demos_dir,
                  const std::filesystem::path& out_dir, const SmoothBenchConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("bench_smooth: need trials >= 1");
  ensure_dir(out_dir);
  const LoadedDemos demos = load_demos(demos_dir);
  const int dims = demos.action_dims;

  // Noise scale: noise_frac of the per-dimension action range over the demos.
  std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
  for (const Rollout& r : demos.rollouts)
    for (int t = 0; t < r.actions.rows(); ++t)
      for (int c = 0; c < dims; ++c) {
        lo[c] = std::min(lo[c], r.actions(t, c));
        hi[c] = std::max(hi[c], r.actions(t, c));
      }
  std::vector<double> sigma(dims);
  for (int c = 0; c < dims; ++c) sigma[c] = cfg.noise_frac * (hi[c] - lo[c]);

  RngStream rng = RngStream::derive(cfg.seed, "smooth-bench");
  std::vector<double> zcr_reductions, acc_reductions;
  std::vector<double> zcr_raw_dim(dims, 0.0), zcr_spl_dim(dims, 0.0);
  std::vector<double> acc_raw_dim(dims, 0.0), acc_spl_dim(dims, 0.0);
  double zcr_raw_avg = 0.0, zcr_spl_avg = 0.0, acc_raw_avg = 0.0, acc_spl_avg = 0.0;

  for (int trial = 0; trial < cfg.trials; ++trial) {
    const Rollout& r =
        demos.rollouts[rng.uniform_int(0, static_cast<int>(demos.rollouts.size()) - 1)];
    const int start = rng.uniform_int(0, r.actions.rows() - cfg.chunk_len);
    Matrix noisy(cfg.chunk_len, dims);
    for (int t = 0; t < cfg.chunk_len; ++t)
      for (int c = 0; c < dims; ++c)
        noisy(t, c) = r.actions(start + t, c) + sigma[c] * rng.normal();

    const ActionChunk raw{std::move(noisy), demos.dt};
    const FitResult fit = fit_least_squares(raw, cfg.n_ctrl, cfg.degree);
    const ActionChunk splined = fit.curve.reconstruct(cfg.chunk_len, demos.dt);

    const SmoothnessComparison cmp = smoothness_report(raw, splined);
    zcr_reductions.push_back(cmp.zcr_reduction_pct);
    acc_reductions.push_back(cmp.acc_p95_reduction_pct);
    for (int c = 0; c < dims; ++c) {
      zcr_raw_dim[c] += cmp.raw.zcr_per_dim[c];
      zcr_spl_dim[c] += cmp.splined.zcr_per_dim[c];
      acc_raw_dim[c] += cmp.raw.acc_p95_per_dim[c];
      acc_spl_dim[c] += cmp.splined.acc_p95_per_dim[c];
    }
    zcr_raw_avg += cmp.raw.zcr_avg;
    zcr_spl_avg += cmp.splined.zcr_avg;
    acc_raw_avg += cmp.raw.acc_p95_avg;
    acc_spl_avg += cmp.splined.acc_p95_avg;
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };

  json doc;
  doc["demos_dir"] = demos_dir.string();
  doc["trials"] = cfg.trials;
  doc["chunk_len"] = cfg.chunk_len;
  doc["noise_frac"] = cfg.noise_frac;
  doc["n_ctrl"] = cfg.n_ctrl;
  doc["degree"] = cfg.degree;
  doc["seed"] = cfg.seed;
  doc["units"] = {{"zcr", "sign flips per velocity pair"},
                  {"acc_p95", "action-units/s^2"}};
  doc["median_zcr_reduction_pct"] = median(zcr_reductions);
  doc["median_acc_p95_reduction_pct"] = median(acc_reductions);
  doc["mean_zcr"] = {{"raw", zcr_raw_avg / cfg.trials}, {"splined", zcr_spl_avg / cfg.trials}};
  doc["mean_acc_p95"] = {{"raw", acc_raw_avg / cfg.trials},
                         {"splined", acc_spl_avg / cfg.trials}};
  io::write_json_file(out_dir / "smoothness.json", doc);

  std::string csv = "dim,zcr_raw,zcr_splined,acc_p95_raw,acc_p95_splined\n";
  for (int c = 0; c < dims; ++c) {
    csv += std::to_string(c) + "," + io::format_double(zcr_raw_dim[c] / cfg.trials) + "," +
           io::format_double(zcr_spl_dim[c] / cfg.trials) + "," +
           io::format_double(acc_raw_dim[c] / cfg.trials) + "," +
           io::format_double(acc_spl_dim[c] / cfg.trials) + "\n";
  }
  io::write_text_file(out_dir / "smoothness.csv", csv);
  return doc;
}

std::string trace_csv(const ExecutionTrace& trace) {
  const int dims = trace.actions.cols();
  std::string out = "t";
  for (int c = 0; c < dims; ++c) out += ",act" + std::to_string(c);
  for (int c = 0; c < kStateDims; ++c) out += ",st" + std::to_string(c);
  out += ",generation,splice,stall\n";
  for (int t = 0; t < trace.actions.rows(); ++t) {
    out += std::to_string(t);
    for (int c = 0; c < dims; ++c) out += "," + io::format_double(trace.actions(t, c));
    for (int c = 0; c < kStateDims; ++c) out += "," + io::format_double(trace.states(t, c));
    out += "," + std::to_string(trace.generation[t]);
    out += "," + std::to_string(static_cast<int>(trace.splice[t]));
    out += "," + std::to_string(static_cast<int>(trace.stall[t]));
    out += "\n";
  }
  return out;
}

json run_sim(const std::filesystem::path& model_path, const std::filesystem::path& out_dir,
             const SimRunConfig& cfg) {
  if (cfg.episodes < 1) throw std::invalid_argument("run_sim: need episodes >= 1");
  if (cfg.exec_mode != "sync" && cfg.exec_mode != "async")
    throw std::invalid_argument("run_sim: exec_mode must be sync or async");
  if (cfg.latency_ticks < 0) throw std::invalid_argument("run_sim: negative latency");
  ensure_dir(out_dir);

  const FlowModel model = load_model(model_path);
  const LatencyModel latency = LatencyModel::fixed_ticks(cfg.latency_ticks, cfg.base.dt());
  ExecOptions opts;
  opts.refit_enabled = cfg.refit_on;

  json episodes = json::array();
  int success_count = 0;
  double completion_sum = 0.0, tracking_sum = 0.0, boundary_sum = 0.0;
  int boundary_runs = 0;

  for (int i = 0; i < cfg.episodes; ++i) {
    EpisodeConfig ep = cfg.base;
    ep.seed = cfg.base.seed + static_cast<uint64_t>(i);
    FlowPolicy policy(&model, cfg.denoise_steps, ep.seed);

    const EpisodeResult result = cfg.exec_mode == "async"
                                     ? run_async(policy, ep, latency, opts)
                                     : run_sync(policy, ep, latency);

    const std::string filename = "trace_" + std::to_string(ep.seed) + ".csv";
    io::write_text_file(out_dir / filename, trace_csv(result.trace));

    success_count += result.success ? 1 : 0;
    completion_sum += result.completion_ticks;
    tracking_sum += result.mean_tracking_error;
    if (result.splice_count > 0) {
      boundary_sum += result.mean_boundary_discontinuity;
      ++boundary_runs;
    }
    episodes.push_back({{"seed", ep.seed},
                        {"file", filename},
                        {"success", result.success},
                        {"completion_ticks", result.completion_ticks},
                        {"mean_tracking_error", result.mean_tracking_error},
                        {"mean_boundary_discontinuity", result.mean_boundary_discontinuity},
                        {"splices", result.splice_count},
                        {"stall_ticks", result.stall_tick_count},
                        {"trace_digest", io::file_digest(out_dir / filename)}});
  }

  json doc;
  doc["model"] = model_path.string();
  doc["model_digest"] = io::file_digest(model_path);
  doc["exec_mode"] = cfg.exec_mode;
  doc["task_mode"] = std::string(task_mode_name(cfg.base.mode));
  doc["refit"] = cfg.refit_on;
  doc["latency_ticks"] = cfg.latency_ticks;
  doc["denoise_steps"] = cfg.denoise_steps;
  doc["episodes"] = cfg.episodes;
  doc["seed_base"] = cfg.base.seed;
  doc["success_count"] = success_count;
  doc["mean_completion_ticks"] = completion_sum / cfg.episodes;
  doc["mean_tracking_error"] = tracking_sum / cfg.episodes;
  doc["mean_boundary_discontinuity"] =
      boundary_runs > 0 ? boundary_sum / boundary_runs : 0.0;
  doc["per_episode"] = std::move(episodes);
  io::write_json_file(out_dir / "summary.json", doc);
  return doc;
}

}  // namespace trajflow::experiments
