#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include <boost/lockfree/spsc_queue.hpp>

#include "lcdog/buffer_pool.hpp"
#include "lcdog/pipeline.hpp"
#include "lcdog/policies.hpp"
#include "lcdog/sensing.hpp"

namespace lcdog {

namespace {

using Clock = std::chrono::steady_clock;

struct CurtainMsg {
  Curtain curtain;
  StrategyId arm;
  std::array<double, 4> q;
  std::array<long long, 4> counts;
};

struct FrameMsg {
  long long frame = 0;
  ObservationGrid obs;
  std::string arm;
  std::optional<StrategyId> strategy;
  std::array<double, 4> q{};
  std::array<long long, 4> counts{};
  bool end = false;
};

struct RewardMsg {
  StrategyId arm;
  double reward;
};

struct EvalJob {
  long long issued = 0;
  long long due = 0;
  DynamicOccupancyGrid bel;
};

struct EvalOutcome {
  long long issued;
  long long due;
  EvalReport report;
};

/// Waitable event counter: bump after producing, wait on the last seen value.
struct Signal {
  std::atomic<std::uint64_t> v{0};
  void bump() {
    v.fetch_add(1, std::memory_order_release);
    v.notify_all();
  }
  std::uint64_t load() const { return v.load(std::memory_order_acquire); }
  void wait(std::uint64_t seen) const { v.wait(seen, std::memory_order_acquire); }
};

/// Sleeps until `start + n / hz`; no-op when hz is 0.
void pace(Clock::time_point start, long long n, double hz) {
  if (hz <= 0.0) return;
  std::this_thread::sleep_until(start + std::chrono::duration_cast<Clock::duration>(
                                            std::chrono::duration<double>(static_cast<double>(n) / hz)));
}

/// Shared run state. Everything but the pool is either a queue endpoint, a
/// progress counter, or a counter read after the threads have joined.
struct Shared {
  explicit Shared(const DynamicOccupancyGrid& init, std::size_t obs_capacity)
      : pool(init), frames(obs_capacity), rewards(4096), evals(8) {}

  GridBufferPool pool;
  boost::lockfree::spsc_queue<FrameMsg*> frames;
  boost::lockfree::spsc_queue<RewardMsg> rewards;
  boost::lockfree::spsc_queue<EvalJob*> evals;
  std::atomic<CurtainMsg*> curtain_slot{nullptr};

  Signal frames_pushed;
  Signal frames_popped;
  Signal evals_pushed;
  std::atomic<long long> next_frame{0};  // imaging progress, read by placement for its horizon
  std::atomic<bool> stop{false};

  std::mutex error_mu;
  std::exception_ptr error;

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(error_mu);
      if (!error) error = e;
    }
    halt();
  }
  void halt() {
    stop.store(true);
    frames_pushed.bump();
    frames_popped.bump();
    evals_pushed.bump();
    pool.wake_all();
  }
};

/// Advances a scene through every frame time up to `frame` (inclusive).
void advance_scene(Scene& scene, Rng& rng, long long& stepped, long long frame, double dt) {
  for (; stepped < frame; ++stepped) {
    const double t = static_cast<double>(stepped + 2) * dt;
    for (SceneObject& obj : scene.objects) obj.step(t, rng);
  }
}

}  // namespace

RunResult run_async(const RunConfig& cfg) {
  cfg.validate();
  const auto wall0 = Clock::now();
  const GridGeometry geom = cfg.make_geometry();
  const MotionModel model = cfg.motion_model();
  const CameraRayTable rays = build_ray_table(geom);
  const std::size_t n = geom.num_cells();
  const int horizon_steps = cfg.eval_horizon_steps();
  const double dt = model.dt;
  const bool strategic = cfg.policy.kind == PolicyKind::Fixed || cfg.policy.kind == PolicyKind::Mab;
  const bool backpressure = cfg.async.imaging_hz <= 0.0;

  Rng init_rng = context_rng(cfg.seed, Context::Init);
  Shared sh(init_grid(geom, model, cfg.particles, init_rng), static_cast<std::size_t>(cfg.async.observation_queue));

  RunResult res;
  res.bandit = BanditState(cfg.bandit);
  AsyncStats stats;
  std::atomic<long long> frames_imaged{0};
  std::atomic<long long> frames_dropped{0};
  std::atomic<long long> random_fills{0};
  std::atomic<long long> evals_dropped{0};
  long long placements = 0;

  auto imaging = [&] {
    try {
      Rng rng = context_rng(cfg.seed, Context::Imaging);
      Rng scene_rng = context_rng(cfg.seed, Context::Scene);
      Scene scene = cfg.make_scene(geom);
      const auto start = Clock::now();
      for (long long j = 0; j < cfg.steps && !sh.stop.load(); ++j) {
        pace(start, j + 1, cfg.async.imaging_hz);
        sh.next_frame.store(j + 1);
        const double t = static_cast<double>(j + 1) * dt;
        const GroundTruth gt = rasterize(scene, t, geom, scene_rng);
        auto msg = std::make_unique<FrameMsg>();
        msg->frame = j;
        if (cfg.policy.kind == PolicyKind::Lidar) {
          const bool scan = j % cfg.lidar_every == 0;
          msg->obs = scan ? lidar_scan(gt.occ, rays, geom, cfg.noise, rng) : ObservationGrid(n, Label::Unknown);
          msg->arm = scan ? "lidar" : "none";
        } else {
          Curtain curtain;
          std::unique_ptr<CurtainMsg> placed;
          if (strategic) placed.reset(sh.curtain_slot.exchange(nullptr, std::memory_order_acq_rel));
          if (placed) {
            curtain = std::move(placed->curtain);
            msg->strategy = placed->arm;
            msg->arm = std::string(strategy_name(placed->arm));
            msg->q = placed->q;
            msg->counts = placed->counts;
          } else {
            curtain = random_curtain(rays, geom, rng);
            msg->arm = strategic ? "random-fill" : "random";
            if (strategic) random_fills.fetch_add(1);
          }
          const DetectionSet det = image_curtain(gt.occ, curtain, cfg.noise, rays, rng);
          msg->obs = extract_observation(curtain, det, rays, n);
        }
        frames_imaged.fetch_add(1);
        FrameMsg* raw = msg.release();
        while (!sh.frames.push(raw)) {
          if (!backpressure || sh.stop.load()) {
            delete raw;
            raw = nullptr;
            frames_dropped.fetch_add(1);
            break;
          }
          const auto seen = sh.frames_popped.load();
          if (!sh.frames.write_available()) sh.frames_popped.wait(seen);
        }
        if (raw) sh.frames_pushed.bump();
      }
      auto end = std::make_unique<FrameMsg>();
      end->end = true;
      FrameMsg* raw = end.release();
      while (!sh.frames.push(raw)) {
        if (sh.stop.load()) {
          delete raw;
          return;
        }
        const auto seen = sh.frames_popped.load();
        if (!sh.frames.write_available()) sh.frames_popped.wait(seen);
      }
      sh.frames_pushed.bump();
    } catch (...) {
      sh.fail(std::current_exception());
    }
  };

  auto filter = [&] {
    try {
      Rng rng = context_rng(cfg.seed, Context::Filter);
      DynamicOccupancyGrid scratch;
      long long belief_frame = -1;
      std::optional<StrategyId> prev_strategy;
      int cur = sh.pool.roles().current;
      Clock::time_point first{};
      for (long long cycle = 0;; ++cycle) {
        FrameMsg* raw = nullptr;
        while (!sh.frames.pop(raw)) {
          if (sh.stop.load()) return;
          const auto seen = sh.frames_pushed.load();
          if (!sh.frames.read_available()) sh.frames_pushed.wait(seen);
        }
        sh.frames_popped.bump();
        std::unique_ptr<FrameMsg> msg(raw);
        if (msg->end) break;
        if (cycle == 0) first = Clock::now();

        int dst = sh.pool.acquire_next();
        while (dst < 0) {
          std::this_thread::yield();
          dst = sh.pool.acquire_next();
        }
        const long long gap = msg->frame - belief_frame;
        DynamicOccupancyGrid& src_grid = sh.pool.buffer(cur);
        DynamicOccupancyGrid& dst_grid = sh.pool.buffer(dst);
        sh.pool.begin_read(cur);
        sh.pool.begin_write(dst);
        const UpdateStats ms = gap == 1 ? motion_update(src_grid, dst_grid, model, rng)
                                        : forecast(src_grid, dst_grid, model, static_cast<double>(gap) * dt, rng, &scratch);
        sh.pool.end_read(cur);
        stats.motion_updates += gap;
        res.truncations += ms.truncation_count;
        res.cell_writes += ms.cells_updated;

        StepRecord rec;
        rec.step = msg->frame;
        rec.t = static_cast<double>(msg->frame + 1) * dt;
        rec.mode = "async";
        rec.arm = msg->arm;
        rec.q = msg->q;
        rec.counts = msg->counts;
        rec.truncation_rate =
            ms.cells_updated ? static_cast<double>(ms.truncation_count) / static_cast<double>(ms.cells_updated) : 0.0;
        try {
          const double reward = self_supervised_reward(dst_grid, msg->obs);
          rec.reward = reward;
          if (cfg.policy.kind == PolicyKind::Mab && prev_strategy) {
            sh.rewards.push(RewardMsg{*prev_strategy, reward});
            rec.reward_arm = prev_strategy;
          }
        } catch (const NoObservedCells&) {
        }
        prev_strategy = msg->strategy;

        measurement_update(dst_grid, msg->obs, cfg.noise, model.bounds());
        rec.mass = dst_grid.total_mass();
        sh.pool.end_write(dst);
        sh.pool.publish(dst, msg->frame);
        cur = dst;
        belief_frame = msg->frame;

        const long long k1 = msg->frame + 1;
        if (k1 % cfg.eval_every == 0 && k1 >= cfg.eval_start && k1 + horizon_steps <= cfg.steps) {
          sh.pool.begin_read(cur);
          auto job = std::make_unique<EvalJob>(EvalJob{k1, k1 + horizon_steps, dst_grid});
          sh.pool.end_read(cur);
          if (sh.evals.push(job.get())) {
            job.release();
            sh.evals_pushed.bump();
          } else {
            evals_dropped.fetch_add(1);
          }
        }
        res.records.push_back(std::move(rec));
        ++stats.filter_cycles;
        stats.filter_seconds = std::chrono::duration<double>(Clock::now() - first).count();
        pace(first, cycle + 1, cfg.async.filter_hz);
      }
    } catch (...) {
      sh.fail(std::current_exception());
    }
  };

  auto placement = [&] {
    try {
      Rng rng = context_rng(cfg.seed, Context::Placement);
      DynamicOccupancyGrid scratch;
      std::uint64_t seen = ~std::uint64_t{0};
      const auto start = Clock::now();
      while (!sh.stop.load()) {
        const std::uint64_t seq = sh.pool.sequence().load(std::memory_order_acquire);
        if (seq == seen) {
          sh.pool.sequence().wait(seq, std::memory_order_acquire);
          continue;
        }
        seen = seq;
        for (RewardMsg r; sh.rewards.pop(r);) update_q(res.bandit, r.arm, r.reward);

        const StrategyId arm =
            cfg.policy.kind == PolicyKind::Mab ? select_action(res.bandit, rng) : cfg.policy.strategy;
        const GridBufferPool::Roles pin = sh.pool.pin_current();
        const long long target = std::max(pin.frame + 1, sh.next_frame.load());
        const double horizon = static_cast<double>(target - pin.frame) * dt;
        DynamicOccupancyGrid& fc = sh.pool.buffer(GridBufferPool::kForecasting);
        sh.pool.begin_read(pin.current);
        sh.pool.begin_write(GridBufferPool::kForecasting);
        forecast(sh.pool.buffer(pin.current), fc, model, horizon, rng, &scratch);
        sh.pool.end_read(pin.current);
        sh.pool.unpin();
        auto msg = std::make_unique<CurtainMsg>(CurtainMsg{place_curtain(fc, arm, rays), arm, res.bandit.q, res.bandit.counts});
        sh.pool.end_write(GridBufferPool::kForecasting);
        delete sh.curtain_slot.exchange(msg.release(), std::memory_order_acq_rel);
        ++placements;

        if (cfg.async.placement_stall_ms > 0) {
          std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(cfg.async.placement_stall_ms));
        }
        pace(start, placements, cfg.async.placement_hz);
      }
      for (RewardMsg r; sh.rewards.pop(r);) update_q(res.bandit, r.arm, r.reward);
    } catch (...) {
      sh.fail(std::current_exception());
    }
  };

  std::vector<EvalOutcome> outcomes;
  std::atomic<bool> evals_done{false};
  auto evaluator = [&] {
    try {
      Rng rng = context_rng(cfg.seed, Context::Eval);
      Rng scene_rng = context_rng(cfg.seed, Context::Scene);
      Scene scene = cfg.make_scene(geom);
      long long stepped = -1;  // last frame index the scene copy has been advanced to
      DynamicOccupancyGrid fc;
      DynamicOccupancyGrid scratch;
      for (;;) {
        EvalJob* raw = nullptr;
        while (!sh.evals.pop(raw)) {
          if (evals_done.load() || sh.stop.load()) {
            if (!sh.evals.pop(raw)) return;
            break;
          }
          const auto seen = sh.evals_pushed.load();
          if (!sh.evals.read_available() && !evals_done.load()) sh.evals_pushed.wait(seen);
        }
        std::unique_ptr<EvalJob> job(raw);
        const long long gt_frame = job->due - 1;
        advance_scene(scene, scene_rng, stepped, gt_frame, dt);
        const GroundTruth gt = rasterize(scene, static_cast<double>(job->due) * dt, geom, scene_rng);
        forecast(job->bel, fc, model, static_cast<double>(horizon_steps) * dt, rng, &scratch);
        try {
          EvalReport report = eval_forecast(binarize(fc), gt.occ, los_mask(gt.occ, rays));
          report.horizon = static_cast<double>(horizon_steps) * dt;
          outcomes.push_back({job->issued, job->due, report});
        } catch (const EmptyEvaluation&) {
        }
      }
    } catch (...) {
      sh.fail(std::current_exception());
    }
  };

  {
    std::jthread eval_thread(evaluator);
    std::jthread place_thread;
    if (strategic) place_thread = std::jthread(placement);
    std::jthread filter_thread(filter);
    std::jthread imaging_thread(imaging);
    imaging_thread.join();
    filter_thread.join();
    sh.stop.store(true);
    sh.pool.wake_all();
    if (place_thread.joinable()) place_thread.join();
    evals_done.store(true);
    sh.evals_pushed.bump();
    eval_thread.join();
  }
  delete sh.curtain_slot.exchange(nullptr);
  for (FrameMsg* f; sh.frames.pop(f);) delete f;
  for (EvalJob* e; sh.evals.pop(e);) delete e;
  if (sh.error) std::rethrow_exception(sh.error);

  // Evaluations land on the record of the step whose ground truth they used.
  for (const EvalOutcome& o : outcomes) {
    auto it = std::lower_bound(res.records.begin(), res.records.end(), o.due - 1,
                               [](const StepRecord& r, long long s) { return r.step < s; });
    if (it == res.records.end() || it->eval) {
      evals_dropped.fetch_add(1);
      continue;
    }
    it->eval = EvalRecord{o.issued, o.report};
  }

  const GridBufferPool::Roles roles = sh.pool.roles();
  res.final_grid = sh.pool.buffer(roles.current);
  stats.placements = placements;
  stats.frames_dropped = frames_dropped.load();
  stats.frames_imaged = frames_imaged.load();
  stats.random_fills = random_fills.load();
  stats.evals_dropped = evals_dropped.load();
  stats.double_writer_violations = sh.pool.double_writer_violations();
  stats.read_write_conflicts = sh.pool.read_write_conflicts();
  stats.filter_blocked = sh.pool.blocked();
  res.async = stats;
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - wall0).count();
  return res;
}

}  // namespace lcdog
