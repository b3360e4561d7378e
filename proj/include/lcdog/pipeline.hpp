#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcdog/bandit.hpp"
#include "lcdog/config.hpp"
#include "lcdog/grid.hpp"
#include "lcdog/metrics.hpp"

namespace lcdog {

/// Context ids; each context seeds its generator with seed ^ id.
enum class Context : std::uint64_t { Filter = 1, Imaging = 2, Placement = 3, Scene = 4, Eval = 5, Init = 6 };
Rng context_rng(std::uint64_t seed, Context ctx);

struct EvalRecord {
  long long issued_step = 0;  // belief the forecast started from
  EvalReport report;
};

/// One metrics line. `arm` is the curtain source used for the observation made
/// this step ("depth", ..., "random", "lidar"), `reward_arm` the arm whose Q the
/// reward updated (if any).
struct StepRecord {
  long long step = 0;
  double t = 0.0;
  std::string mode;
  std::string arm;
  std::optional<double> reward;
  std::optional<StrategyId> reward_arm;
  std::array<double, 4> q{};
  std::array<long long, 4> counts{};
  std::optional<EvalRecord> eval;
  double truncation_rate = 0.0;
  double mass = 0.0;
};

std::string to_jsonl(const StepRecord& r);

/// Counters from the async buffer protocol monitor.
struct AsyncStats {
  long long filter_cycles = 0;
  long long motion_updates = 0;
  long long placements = 0;
  long long frames_imaged = 0;
  long long frames_dropped = 0;
  long long random_fills = 0;
  long long double_writer_violations = 0;
  long long read_write_conflicts = 0;
  long long filter_blocked = 0;
  long long evals_dropped = 0;
  double filter_seconds = 0.0;
  double filter_hz() const { return filter_seconds > 0 ? filter_cycles / filter_seconds : 0.0; }
};

struct RunResult {
  std::vector<StepRecord> records;
  BanditState bandit;
  DynamicOccupancyGrid final_grid;
  long long truncations = 0;
  long long cell_writes = 0;
  double wall_seconds = 0.0;
  std::optional<AsyncStats> async;

  double truncation_rate() const { return cell_writes ? static_cast<double>(truncations) / cell_writes : 0.0; }
  /// Means over evaluation ticks (NaN when there were none).
  EvalReport mean_eval() const;
  std::size_t num_evals() const;
  /// Per-arm Q averaged over all logged steps.
  std::array<double, 4> mean_q() const;
};

/// Deterministic single-context loop. Identical configs give identical records.
RunResult run_sync(const RunConfig& cfg);

/// Imaging, filtering and placement in separate threads sharing a four-buffer
/// grid pool, plus a read-only evaluation consumer.
RunResult run_async(const RunConfig& cfg);

RunResult run(const RunConfig& cfg);

/// Independent runs spread over up to `jobs` threads (0 = all available). Kernels
/// inside each run go serial while the sweep is parallel. Results keep input order.
std::vector<RunResult> run_many(const std::vector<RunConfig>& cfgs, int jobs = 0);

/// metrics.jsonl, run.json, final_grid.bin and (optionally) snapshots/ under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& result);

}  // namespace lcdog
