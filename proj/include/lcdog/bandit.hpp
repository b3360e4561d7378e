#pragma once

#include <array>
#include <stdexcept>

#include "lcdog/grid.hpp"
#include "lcdog/observation.hpp"
#include "lcdog/policies.hpp"
#include "lcdog/rng.hpp"

namespace lcdog {

struct BanditParams {
  double epsilon = 0.1;
  double alpha = 0.1;
  double q0 = 0.5;
  void validate() const;
};

/// Epsilon-greedy bandit over the four placement strategies with a constant step size.
struct BanditState {
  std::array<double, 4> q{};
  std::array<long long, 4> counts{};
  double epsilon = 0.1;
  double alpha = 0.1;

  explicit BanditState(const BanditParams& p = {});
};

/// Explores uniformly with probability epsilon, else takes argmax Q (lowest index on ties).
StrategyId select_action(BanditState& state, Rng& rng);

/// Q(a) += alpha * (reward - Q(a)).
void update_q(BanditState& state, StrategyId arm, double reward);

class NoObservedCells : public std::runtime_error {
 public:
  NoObservedCells() : std::runtime_error("reward undefined: observation has no known cells") {}
};

/// F1 agreement between the forecast occupancy (thresholded at 0.5) and the
/// observed labels, over observed cells. Both sides empty counts as 1.
double self_supervised_reward(const DynamicOccupancyGrid& forecast, const ObservationGrid& obs);

}  // namespace lcdog
