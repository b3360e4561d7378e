#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lcdog/pipeline.hpp"

namespace lcdog {

/// Per-run summary as stored in run.json.
struct RunSummary {
  std::string policy;
  std::string mode;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double iou = 0.0;
  std::array<double, 4> q{};
  std::array<double, 4> mean_q{};
  std::array<long long, 4> counts{};
  double truncation_rate = 0.0;
  bool has_eval = false;
};

RunSummary summarize(const RunConfig& cfg, const RunResult& result);
RunSummary load_run_summary(const std::filesystem::path& run_dir);

/// Sample mean with a two-sided 95% Student-t half width (0 for n < 2).
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;
  double lo() const { return mean - half_width; }
  double hi() const { return mean + half_width; }
};
MeanCi mean_ci(std::span<const double> xs, double confidence = 0.95);

/// Welch one-sided test that mean(a) < mean(b); returns the p-value.
double welch_less_p(std::span<const double> a, std::span<const double> b);

/// Markdown tables: per-policy metric means with CIs, then arm frequency and
/// mean Q for bandit runs.
std::string format_tables(std::span<const RunSummary> runs);

}  // namespace lcdog
