#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lcdog/geometry.hpp"
#include "lcdog/grid.hpp"
#include "lcdog/sensing.hpp"

namespace lcdog {

enum class StrategyId : int { DepthProb = 0, OccEntropy = 1, VelEntropy = 2, Combined = 3 };

inline constexpr std::array<StrategyId, 4> kAllStrategies{
    StrategyId::DepthProb, StrategyId::OccEntropy, StrategyId::VelEntropy, StrategyId::Combined};

/// Short CLI names: depth, occ, vel, cmb.
std::string_view strategy_name(StrategyId s);
std::optional<StrategyId> parse_strategy(std::string_view name);

struct DepthProbProfile {
  std::vector<double> depth;       // probability the return lands in this cell
  std::vector<double> visibility;  // probability every cell up to and including this one is free
};

/// Ray marching over the occupancies along one ray; linear in ray length.
DepthProbProfile depth_prob_profile(const DynamicOccupancyGrid& grid, std::span<const RayCell> ray);

/// Binary entropy in bits, with 0 log 0 = 0.
double occ_entropy(double omega);

/// Differential entropy (bits) of the Gaussian fitted to a particle set.
double vel_entropy(std::span<const Vec2> velocities, std::span<const double> weights);
double gaussian_entropy_bits(const Cov2& cov);

/// H_occ(omega) + omega * H_vel.
double combined_score(double omega, std::span<const Vec2> velocities, std::span<const double> weights);

/// Mutual information (bits) between one cell's state and a noisy occupancy reading of it.
double info_gain_cell(double omega, double false_positive, double false_negative);

/// Per-ray argmax of the strategy score over in-range cells; ties go to the nearer cell.
Curtain place_curtain(const DynamicOccupancyGrid& forecast, StrategyId strategy,
                      const CameraRayTable& rays);

/// Strategy score of every cell on a ray (same values place_curtain maximizes).
std::vector<double> ray_scores(const DynamicOccupancyGrid& forecast, StrategyId strategy,
                               std::span<const RayCell> ray);

namespace ref {
Curtain place_curtain(const DynamicOccupancyGrid& forecast, StrategyId strategy,
                      const CameraRayTable& rays);
}  // namespace ref

}  // namespace lcdog
