#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lcdog/bandit.hpp"
#include "lcdog/geometry.hpp"
#include "lcdog/grid.hpp"
#include "lcdog/policies.hpp"
#include "lcdog/worldsim.hpp"

namespace lcdog {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PolicyKind { Fixed, Random, Lidar, Mab };

struct Policy {
  PolicyKind kind = PolicyKind::Mab;
  StrategyId strategy = StrategyId::DepthProb;  // used when kind == Fixed

  friend bool operator==(const Policy&, const Policy&) = default;
};

/// depth|occ|vel|cmb|random|lidar|mab.
std::string policy_name(const Policy& p);
Policy parse_policy(std::string_view name);

enum class RunMode { Sync, Async };
std::string_view mode_name(RunMode m);
RunMode parse_mode(std::string_view name);

/// Simulated clock rates for the async contexts; 0 means free-running.
struct AsyncParams {
  double imaging_hz = 45.0;
  double filter_hz = 0.0;
  double placement_hz = 0.0;
  double placement_stall_ms = 0.0;
  std::size_t observation_queue = 8;
};

struct RunConfig {
  GeometryParams geometry;
  MotionModel motion;
  bool vel_noise_set = false;  // false: derived from dt
  bool pos_noise_set = false;  // false: derived from cell size and dt
  int particles = 10;
  SensorNoiseModel noise;
  int lidar_every = 4;
  BanditParams bandit;
  std::string scene_preset = "sim-default";  // "sim-default", "empty" or "custom"
  std::vector<SceneObject> scene_objects;    // used when scene_preset == "custom"

  Policy policy;
  long long steps = 600;
  double eval_horizon = 0.5;
  int eval_every = 30;
  int eval_start = 0;  // first step eligible for an evaluation tick
  std::uint64_t seed = 1;
  RunMode mode = RunMode::Sync;
  /// Sync mode: every other frame images a random filler curtain instead of a
  /// computed one (fixed-strategy and bandit policies).
  bool random_fill = true;
  int snapshot_every = 0;  // grid snapshots for rendering; 0 disables
  std::filesystem::path out;
  AsyncParams async;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;
  GridGeometry make_geometry() const;
  MotionModel motion_model() const;
  Scene make_scene(const GridGeometry& geom) const;
  int eval_horizon_steps() const;
};

RunConfig config_from_json_text(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json_text(const RunConfig& cfg);

}  // namespace lcdog
