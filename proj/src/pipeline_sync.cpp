#include <chrono>
#include <cstdio>
#include <deque>

#include "lcdog/grid_io.hpp"
#include "lcdog/pipeline.hpp"
#include "lcdog/sensing.hpp"

namespace lcdog {

namespace {

struct PendingEval {
  long long issued;
  long long due;
  CellMask pred;
};

std::filesystem::path snapshot_path(const std::filesystem::path& out, long long step) {
  char name[32];
  std::snprintf(name, sizeof name, "grid_%06lld.bin", step);
  return out / "snapshots" / name;
}

}  // namespace

RunResult run_sync(const RunConfig& cfg) {
  cfg.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  const GridGeometry geom = cfg.make_geometry();
  const MotionModel model = cfg.motion_model();
  const CameraRayTable rays = build_ray_table(geom);
  const std::size_t n = geom.num_cells();
  const int horizon_steps = cfg.eval_horizon_steps();
  const double horizon = horizon_steps * model.dt;
  Scene scene = cfg.make_scene(geom);

  Rng init_rng = context_rng(cfg.seed, Context::Init);
  Rng filter_rng = context_rng(cfg.seed, Context::Filter);
  Rng imaging_rng = context_rng(cfg.seed, Context::Imaging);
  Rng placement_rng = context_rng(cfg.seed, Context::Placement);
  Rng scene_rng = context_rng(cfg.seed, Context::Scene);
  Rng eval_rng = context_rng(cfg.seed, Context::Eval);

  RunResult res;
  res.bandit = BanditState(cfg.bandit);
  DynamicOccupancyGrid bel = init_grid(geom, model, cfg.particles, init_rng);
  DynamicOccupancyGrid pred;
  DynamicOccupancyGrid fc;
  DynamicOccupancyGrid scratch;
  std::deque<PendingEval> pending;
  // Arm whose curtain produced the observation most recently folded into `bel`.
  std::optional<StrategyId> prev_arm;
  const bool snapshots = !cfg.out.empty() && cfg.snapshot_every > 0;
  if (snapshots) {
    std::filesystem::create_directories(cfg.out / "snapshots");
    save_grid(snapshot_path(cfg.out, 0), bel);
  }

  res.records.reserve(static_cast<std::size_t>(cfg.steps));
  for (long long k = 0; k < cfg.steps; ++k) {
    StepRecord rec;
    rec.step = k;
    rec.t = static_cast<double>(k + 1) * model.dt;
    rec.mode = "sync";

    // The one-step prediction doubles as the placement forecast and the filter prior.
    const UpdateStats ms = motion_update(bel, pred, model, filter_rng);
    res.truncations += ms.truncation_count;
    res.cell_writes += ms.cells_updated;
    rec.truncation_rate =
        ms.cells_updated ? static_cast<double>(ms.truncation_count) / static_cast<double>(ms.cells_updated) : 0.0;

    std::optional<StrategyId> arm;
    Curtain curtain;
    bool lidar_frame = false;
    const bool strategic = cfg.policy.kind == PolicyKind::Fixed || cfg.policy.kind == PolicyKind::Mab;
    const bool filler = strategic && cfg.random_fill && k % 2 == 1;
    if (filler) {
      curtain = random_curtain(rays, geom, placement_rng);
    } else {
      switch (cfg.policy.kind) {
        case PolicyKind::Fixed: arm = cfg.policy.strategy; break;
        case PolicyKind::Mab: arm = select_action(res.bandit, placement_rng); break;
        case PolicyKind::Random: curtain = random_curtain(rays, geom, placement_rng); break;
        case PolicyKind::Lidar: lidar_frame = k % cfg.lidar_every == 0; break;
      }
    }
    if (arm) curtain = place_curtain(pred, *arm, rays);

    const GroundTruth gt = rasterize(scene, rec.t, geom, scene_rng);
    ObservationGrid obs;
    if (cfg.policy.kind == PolicyKind::Lidar) {
      obs = lidar_frame ? lidar_scan(gt.occ, rays, geom, cfg.noise, imaging_rng) : ObservationGrid(n, Label::Unknown);
      rec.arm = lidar_frame ? "lidar" : "none";
    } else {
      const DetectionSet det = image_curtain(gt.occ, curtain, cfg.noise, rays, imaging_rng);
      obs = extract_observation(curtain, det, rays, n);
      rec.arm = arm ? std::string(strategy_name(*arm)) : filler ? "random-fill" : "random";
    }

    try {
      const double reward = self_supervised_reward(pred, obs);
      rec.reward = reward;
      if (cfg.policy.kind == PolicyKind::Mab && prev_arm) {
        update_q(res.bandit, *prev_arm, reward);
        rec.reward_arm = prev_arm;
      }
    } catch (const NoObservedCells&) {
    }
    prev_arm = arm;

    measurement_update(pred, obs, cfg.noise, model.bounds());
    std::swap(bel, pred);

    if (!pending.empty() && pending.front().due == k + 1) {
      const CellMask los = los_mask(gt.occ, rays);
      try {
        EvalReport report = eval_forecast(pending.front().pred, gt.occ, los);
        report.horizon = horizon;
        rec.eval = EvalRecord{pending.front().issued, report};
      } catch (const EmptyEvaluation&) {
      }
      pending.pop_front();
    }
    if ((k + 1) % cfg.eval_every == 0 && k + 1 >= cfg.eval_start && k + 1 + horizon_steps <= cfg.steps) {
      forecast(bel, fc, model, horizon, eval_rng, &scratch);
      pending.push_back({k + 1, k + 1 + horizon_steps, binarize(fc)});
    }

    rec.q = res.bandit.q;
    rec.counts = res.bandit.counts;
    rec.mass = bel.total_mass();
    res.records.push_back(std::move(rec));
    if (snapshots && (k + 1) % cfg.snapshot_every == 0) save_grid(snapshot_path(cfg.out, k + 1), bel);
  }

  res.final_grid = std::move(bel);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return res;
}

}  // namespace lcdog
