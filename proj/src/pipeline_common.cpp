#include <cmath>
#include <exception>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>
#include <omp.h>

#include "lcdog/grid_io.hpp"
#include "lcdog/pipeline.hpp"

namespace lcdog {

using nlohmann::json;

Rng context_rng(std::uint64_t seed, Context ctx) { return Rng(seed ^ static_cast<std::uint64_t>(ctx)); }

std::string to_jsonl(const StepRecord& r) {
  json j;
  j["step"] = r.step;
  j["t"] = r.t;
  j["mode"] = r.mode;
  j["arm"] = r.arm;
  j["reward"] = r.reward ? json(*r.reward) : json(nullptr);
  j["reward_arm"] = r.reward_arm ? json(std::string(strategy_name(*r.reward_arm))) : json(nullptr);
  j["q"] = r.q;
  j["counts"] = r.counts;
  for (std::size_t a = 0; a < 4; ++a) {
    j["q" + std::to_string(a)] = r.q[a];
    j["n" + std::to_string(a)] = r.counts[a];
  }
  if (r.eval) {
    const EvalReport& e = r.eval->report;
    j["eval"] = {{"accuracy", e.accuracy}, {"precision", e.precision}, {"recall", e.recall},
                 {"f1", e.f1},             {"iou", e.iou},             {"tp", e.tp},
                 {"fp", e.fp},             {"fn", e.fn},               {"tn", e.tn},
                 {"n_los", e.n_los},       {"horizon", e.horizon},     {"issued_step", r.eval->issued_step}};
  } else {
    j["eval"] = nullptr;
  }
  j["truncation_rate"] = r.truncation_rate;
  j["mass"] = r.mass;
  return j.dump();
}

EvalReport RunResult::mean_eval() const {
  EvalReport m;
  std::size_t n = 0;
  for (const StepRecord& r : records) {
    if (!r.eval) continue;
    const EvalReport& e = r.eval->report;
    m.accuracy += e.accuracy;
    m.precision += e.precision;
    m.recall += e.recall;
    m.f1 += e.f1;
    m.iou += e.iou;
    m.tp += e.tp;
    m.fp += e.fp;
    m.fn += e.fn;
    m.tn += e.tn;
    m.n_los += e.n_los;
    m.horizon = e.horizon;
    ++n;
  }
  if (n == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.accuracy = m.precision = m.recall = m.f1 = m.iou = nan;
    return m;
  }
  const double inv = 1.0 / static_cast<double>(n);
  m.accuracy *= inv;
  m.precision *= inv;
  m.recall *= inv;
  m.f1 *= inv;
  m.iou *= inv;
  return m;
}

std::size_t RunResult::num_evals() const {
  std::size_t n = 0;
  for (const StepRecord& r : records) n += r.eval.has_value();
  return n;
}

std::array<double, 4> RunResult::mean_q() const {
  std::array<double, 4> m{};
  if (records.empty()) return m;
  for (const StepRecord& r : records) {
    for (std::size_t a = 0; a < 4; ++a) m[a] += r.q[a];
  }
  for (double& v : m) v /= static_cast<double>(records.size());
  return m;
}

RunResult run(const RunConfig& cfg) { return cfg.mode == RunMode::Sync ? run_sync(cfg) : run_async(cfg); }

std::vector<RunResult> run_many(const std::vector<RunConfig>& cfgs, int jobs) {
  std::vector<RunResult> out(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  const int levels = omp_get_max_active_levels();
  omp_set_max_active_levels(1);
  const auto n = static_cast<long long>(cfgs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run(cfgs[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  omp_set_max_active_levels(levels);
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void write_run_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const RunResult& result) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "metrics.jsonl", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "metrics.jsonl").string());
    for (const StepRecord& r : result.records) out << to_jsonl(r) << '\n';
  }
  json summary;
  summary["config"] = json::parse(config_to_json_text(cfg));
  const EvalReport m = result.mean_eval();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  summary["summary"] = {{"policy", policy_name(cfg.policy)},
                        {"mode", mode_name(cfg.mode)},
                        {"seed", cfg.seed},
                        {"steps", result.records.size()},
                        {"evals", result.num_evals()},
                        {"accuracy", num(m.accuracy)},
                        {"precision", num(m.precision)},
                        {"recall", num(m.recall)},
                        {"f1", num(m.f1)},
                        {"iou", num(m.iou)},
                        {"q", result.bandit.q},
                        {"counts", result.bandit.counts},
                        {"mean_q", result.mean_q()},
                        {"truncations", result.truncations},
                        {"cell_writes", result.cell_writes},
                        {"truncation_rate", result.truncation_rate()},
                        {"wall_seconds", result.wall_seconds}};
  if (result.async) {
    const AsyncStats& a = *result.async;
    summary["async"] = {{"filter_cycles", a.filter_cycles},
                        {"motion_updates", a.motion_updates},
                        {"placements", a.placements},
                        {"frames_imaged", a.frames_imaged},
                        {"frames_dropped", a.frames_dropped},
                        {"random_fills", a.random_fills},
                        {"double_writer_violations", a.double_writer_violations},
                        {"read_write_conflicts", a.read_write_conflicts},
                        {"filter_blocked", a.filter_blocked},
                        {"evals_dropped", a.evals_dropped},
                        {"filter_hz", a.filter_hz()}};
  }
  std::ofstream(dir / "run.json") << summary.dump(2) << '\n';
  if (!result.final_grid.empty()) save_grid(dir / "final_grid.bin", result.final_grid);
}

}  // namespace lcdog
