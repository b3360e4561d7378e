#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <regex>

#include <CLI11.hpp>

#include "lcdog/grid_io.hpp"
#include "lcdog/pipeline.hpp"
#include "lcdog/policies.hpp"
#include "lcdog/render.hpp"
#include "lcdog/report.hpp"
#include "lcdog/sensing.hpp"

namespace fs = std::filesystem;
using namespace lcdog;

namespace {

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> policy;
  std::optional<long long> steps;
  std::optional<std::string> mode;
  std::string out;
  std::optional<long long> snapshot_every;
  bool frames = false;
};

RunConfig load_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
  return load_config(path);
}

std::vector<std::pair<double, fs::path>> list_snapshots(const fs::path& run_dir) {
  std::vector<std::pair<double, fs::path>> snaps;
  const fs::path dir = run_dir / "snapshots";
  if (!fs::is_directory(dir)) return snaps;
  const std::regex pattern(R"(grid_\d+\.bin)");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!std::regex_match(e.path().filename().string(), pattern)) continue;
    snaps.emplace_back(load_grid(e.path()).timestamp(), e.path());
  }
  std::sort(snaps.begin(), snaps.end());
  return snaps;
}

/// One frame per 1/fps seconds of run time, each showing the latest snapshot
/// at or before that time. Falls back to final_grid.bin.
int render_run(const fs::path& run_dir, double fps, const fs::path& out_dir, int scale, double v_max) {
  std::vector<std::pair<double, fs::path>> snaps = list_snapshots(run_dir);
  if (snaps.empty()) {
    const fs::path final_grid = run_dir / "final_grid.bin";
    if (!fs::exists(final_grid)) throw std::runtime_error("no snapshots or final_grid.bin in " + run_dir.string());
    snaps.emplace_back(0.0, final_grid);
  }
  fs::create_directories(out_dir);
  const double t0 = snaps.front().first;
  const double t1 = snaps.back().first;
  const auto frames = static_cast<long long>(std::floor((t1 - t0) * fps + 1e-9)) + 1;
  std::size_t cursor = 0;
  std::size_t loaded = snaps.size();
  DynamicOccupancyGrid grid;
  for (long long f = 0; f < frames; ++f) {
    const double t = t0 + static_cast<double>(f) / fps;
    while (cursor + 1 < snaps.size() && snaps[cursor + 1].first <= t + 1e-9) ++cursor;
    if (cursor != loaded) {
      grid = load_grid(snaps[cursor].second);
      loaded = cursor;
    }
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05lld.ppm", f);
    save_ppm(out_dir / name, render_grid(grid, v_max, scale));
  }
  std::cout << "wrote " << frames << " frames to " << out_dir.string() << "\n";
  return 0;
}

int cmd_run(const RunOptions& o) {
  RunConfig cfg = load_or_default(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.policy) cfg.policy = parse_policy(*o.policy);
  if (o.steps) cfg.steps = *o.steps;
  if (o.mode) cfg.mode = parse_mode(*o.mode);
  if (o.snapshot_every) cfg.snapshot_every = *o.snapshot_every;
  if (o.frames && cfg.snapshot_every == 0) cfg.snapshot_every = 1;
  cfg.out = o.out;
  if (cfg.out.empty() && (o.frames || cfg.snapshot_every > 0)) throw ConfigError("snapshots and frames need --out");
  cfg.validate();

  const RunResult res = run(cfg);
  const RunSummary s = summarize(cfg, res);
  if (!cfg.out.empty()) {
    write_run_outputs(cfg.out, cfg, res);
    if (o.frames) render_run(cfg.out, 1.0 / cfg.motion.dt, cfg.out / "frames", 1, 2.0);
  }
  std::printf("policy=%s mode=%s seed=%llu steps=%zu evals=%zu f1=%.4f iou=%.4f accuracy=%.4f "
              "truncation_rate=%.5f wall=%.2fs\n",
              s.policy.c_str(), s.mode.c_str(), static_cast<unsigned long long>(s.seed), res.records.size(),
              res.num_evals(), s.f1, s.iou, s.accuracy, s.truncation_rate, res.wall_seconds);
  if (res.async) {
    const AsyncStats& a = *res.async;
    std::printf("filter_cycles=%lld filter_hz=%.1f frames_dropped=%lld random_fills=%lld placements=%lld "
                "double_writer_violations=%lld filter_blocked=%lld\n",
                a.filter_cycles, a.filter_hz(), a.frames_dropped, a.random_fills, a.placements,
                a.double_writer_violations, a.filter_blocked);
  }
  return 0;
}

int cmd_eval(const std::vector<std::string>& dirs) {
  std::vector<RunSummary> runs;
  for (const std::string& d : dirs) {
    if (fs::exists(fs::path(d) / "run.json")) {
      runs.push_back(load_run_summary(d));
      continue;
    }
    if (!fs::is_directory(d)) throw std::runtime_error("not a run directory: " + d);
    std::vector<fs::path> children;
    for (const auto& e : fs::directory_iterator(d)) {
      if (fs::exists(e.path() / "run.json")) children.push_back(e.path());
    }
    if (children.empty()) throw std::runtime_error("no run.json under " + d);
    std::sort(children.begin(), children.end());
    for (const fs::path& c : children) runs.push_back(load_run_summary(c));
  }
  std::cout << format_tables(runs);
  return 0;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& policies, int seeds,
              std::optional<long long> steps, const fs::path& out, int jobs) {
  const RunConfig base = load_or_default(config);
  std::vector<RunConfig> cfgs;
  for (const std::string& p : policies) {
    for (int s = 1; s <= seeds; ++s) {
      RunConfig c = base;
      c.policy = parse_policy(p);
      c.seed = static_cast<std::uint64_t>(s);
      if (steps) c.steps = *steps;
      c.out.clear();
      c.validate();
      cfgs.push_back(c);
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<RunResult> results = run_many(cfgs, jobs);
  std::vector<RunSummary> sums;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    sums.push_back(summarize(cfgs[i], results[i]));
    if (!out.empty()) {
      write_run_outputs(out / (policy_name(cfgs[i].policy) + "_s" + std::to_string(cfgs[i].seed)), cfgs[i],
                        results[i]);
    }
  }
  std::cout << format_tables(sums);
  std::cout << "\nwall " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return 0;
}

int cmd_bench(const std::string& config, int iters) {
  const RunConfig cfg = load_or_default(config);
  const GridGeometry geom = cfg.make_geometry();
  const MotionModel model = cfg.motion_model();
  const CameraRayTable rays = build_ray_table(geom);
  Rng rng = context_rng(cfg.seed, Context::Filter);
  Rng scene_rng = context_rng(cfg.seed, Context::Scene);
  DynamicOccupancyGrid a = init_grid(geom, model, cfg.particles, rng);
  DynamicOccupancyGrid b;
  Scene scene = cfg.make_scene(geom);
  const GroundTruth gt = rasterize(scene, model.dt, geom, scene_rng);
  const Curtain curtain = random_curtain(rays, geom, rng);
  const ObservationGrid obs = extract_observation(curtain, image_curtain(gt.occ, curtain, cfg.noise, rays, rng), rays,
                                                  geom.num_cells());
  // Warm the belief so the placement scores are not all ties.
  for (int i = 0; i < 5; ++i) {
    motion_update(a, b, model, rng);
    measurement_update(b, obs, cfg.noise, model.bounds());
    std::swap(a, b);
  }

  using Clock = std::chrono::steady_clock;
  auto per_second = [&](auto&& body) {
    body();
    const auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) body();
    return iters / std::chrono::duration<double>(Clock::now() - t0).count();
  };
  const double motion = per_second([&] { motion_update(a, b, model, rng); });
  DynamicOccupancyGrid m = b;
  const double measurement = per_second([&] {
    m = b;
    measurement_update(m, obs, cfg.noise, model.bounds());
  });
  const double copy = per_second([&] { m = b; });
  const double cycle = per_second([&] {
    motion_update(a, b, model, rng);
    measurement_update(b, obs, cfg.noise, model.bounds());
    std::swap(a, b);
  });
  std::printf("grid %dx%d, %d particles/cell, %d iterations each\n", geom.width(), geom.height(), cfg.particles, iters);
  std::printf("%-24s %10.1f it/s\n", "motion_update", motion);
  std::printf("%-24s %10.1f it/s\n", "measurement_update", 1.0 / (1.0 / measurement - 1.0 / copy));
  for (StrategyId s : kAllStrategies) {
    const double p = per_second([&] { (void)place_curtain(a, s, rays); });
    std::printf("place_curtain %-10s %10.1f it/s\n", std::string(strategy_name(s)).c_str(), p);
  }
  std::printf("%-24s %10.1f cycles/s\n", "motion+measurement", cycle);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-curtain active perception with dynamic occupancy grids"};
  app.require_subcommand(1);

  RunOptions ro;
  CLI::App* run_cmd = app.add_subcommand("run", "Run one simulation");
  run_cmd->add_option("--config", ro.config, "JSON run config");
  run_cmd->add_option("--seed", ro.seed, "64-bit seed");
  run_cmd->add_option("--policy", ro.policy, "depth|occ|vel|cmb|random|lidar|mab");
  run_cmd->add_option("--steps", ro.steps, "Number of steps");
  run_cmd->add_option("--mode", ro.mode, "sync|async");
  run_cmd->add_option("--out", ro.out, "Output directory");
  run_cmd->add_option("--snapshot-every", ro.snapshot_every, "Save the belief every N steps");
  run_cmd->add_flag("--frames", ro.frames, "Also render PPM frames from the snapshots");

  std::vector<std::string> eval_dirs;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Aggregate run directories into tables");
  eval_cmd->add_option("--runs", eval_dirs, "Run directories or parents of run directories")->required();

  std::string render_dir;
  std::string render_out;
  double fps = 10.0;
  int scale = 1;
  double v_max = 2.0;
  CLI::App* render_cmd = app.add_subcommand("render", "Render logged snapshots to PPM frames");
  render_cmd->add_option("--run", render_dir, "Run directory")->required();
  render_cmd->add_option("--fps", fps, "Frames per second of run time")->check(CLI::PositiveNumber);
  render_cmd->add_option("--out", render_out, "Frame directory (default RUN/frames)");
  render_cmd->add_option("--scale", scale, "Integer upscale")->check(CLI::PositiveNumber);
  render_cmd->add_option("--vmax", v_max, "Speed at full saturation (m/s)")->check(CLI::PositiveNumber);

  std::string sweep_config;
  std::vector<std::string> sweep_policies{"depth", "occ", "vel", "cmb", "random", "mab"};
  int sweep_seeds = 20;
  std::optional<long long> sweep_steps;
  std::string sweep_out;
  int sweep_jobs = 0;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run policies x seeds in parallel and print tables");
  sweep_cmd->add_option("--config", sweep_config, "JSON run config");
  sweep_cmd->add_option("--policies", sweep_policies, "Policies to run");
  sweep_cmd->add_option("--seeds", sweep_seeds, "Seeds 1..N")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--steps", sweep_steps, "Steps per run");
  sweep_cmd->add_option("--out", sweep_out, "Write each run under this directory");
  sweep_cmd->add_option("--jobs", sweep_jobs, "Parallel runs (0 = all cores)");

  std::string bench_config;
  int iters = 50;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Kernel throughput");
  bench_cmd->add_option("--config", bench_config, "JSON run config");
  bench_cmd->add_option("--iters", iters, "Iterations per kernel")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(ro);
    if (*eval_cmd) return cmd_eval(eval_dirs);
    if (*render_cmd) return render_run(render_dir, fps, render_out.empty() ? fs::path(render_dir) / "frames" : fs::path(render_out), scale, v_max);
    if (*sweep_cmd) return cmd_sweep(sweep_config, sweep_policies, sweep_seeds, sweep_steps, sweep_out, sweep_jobs);
    if (*bench_cmd) return cmd_bench(bench_config, iters);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
