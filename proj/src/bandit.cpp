#include "lcdog/bandit.hpp"

#include <cmath>

namespace lcdog {

void BanditParams::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("bandit: epsilon in [0,1]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("bandit: alpha in (0,1]");
  if (!std::isfinite(q0)) throw std::invalid_argument("bandit: q0 must be finite");
}

BanditState::BanditState(const BanditParams& p) : epsilon(p.epsilon), alpha(p.alpha) {
  q.fill(p.q0);
}

StrategyId select_action(BanditState& state, Rng& rng) {
  std::size_t arm = 0;
  if (rng.uniform() < state.epsilon) {
    arm = static_cast<std::size_t>(rng.below(state.q.size()));
  } else {
    for (std::size_t a = 1; a < state.q.size(); ++a) {
      if (state.q[a] > state.q[arm]) arm = a;
    }
  }
  ++state.counts[arm];
  return static_cast<StrategyId>(arm);
}

void update_q(BanditState& state, StrategyId arm, double reward) {
  double& q = state.q[static_cast<std::size_t>(arm)];
  q += state.alpha * (reward - q);
}

double self_supervised_reward(const DynamicOccupancyGrid& forecast, const ObservationGrid& obs) {
  if (obs.size() != forecast.num_cells()) throw GridError("observation size mismatch");
  long long tp = 0, fp = 0, fn = 0, observed = 0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i] == Label::Unknown) continue;
    ++observed;
    const bool pred = forecast.occ(i) >= 0.5;
    const bool truth = obs[i] == Label::Occupied;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  if (observed == 0) throw NoObservedCells();
  const long long denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace lcdog
