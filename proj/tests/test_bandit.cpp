#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lcdog/bandit.hpp"
#include "oracles.hpp"

using namespace lcdog;

namespace {

BanditState with_q(std::array<double, 4> q, double eps) {
  BanditState s(BanditParams{eps, 0.1, 0.0});
  s.q = q;
  return s;
}

/// 4-cell grid with the given forecast occupancies.
DynamicOccupancyGrid forecast_of(std::initializer_list<double> occ) {
  GeometryParams p;
  p.width_cells = static_cast<int>(occ.size());
  p.height_cells = 1;
  p.r_min = 0.0;
  DynamicOccupancyGrid g{GridGeometry(p), 1};
  std::size_t i = 0;
  for (double w : occ) g.occ(i++) = w;
  return g;
}

}  // namespace

TEST_SUITE("bandit") {

TEST_CASE("defaults and validation") {
  const BanditState s;
  for (double q : s.q) CHECK(q == 0.5);
  for (long long c : s.counts) CHECK(c == 0);
  CHECK_THROWS(BanditParams{1.5, 0.1, 0.5}.validate());
  CHECK_THROWS(BanditParams{0.1, 0.0, 0.5}.validate());
  CHECK_NOTHROW(BanditParams{0.0, 1.0, 0.0}.validate());
}

TEST_CASE("greedy selection") {
  BanditState s = with_q({0.1, 0.3, 0.2, 0.25}, 0.0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(select_action(s, rng) == StrategyId::OccEntropy);
  CHECK(s.counts == std::array<long long, 4>{0, 100, 0, 0});

  BanditState tie = with_q({0.2, 0.7, 0.7, 0.7}, 0.0);
  CHECK(select_action(tie, rng) == StrategyId::OccEntropy);
  BanditState all = with_q({0.4, 0.4, 0.4, 0.4}, 0.0);
  CHECK(select_action(all, rng) == StrategyId::DepthProb);

  // Adding a constant to every Q keeps the greedy choice.
  std::mt19937_64 gen(3);
  for (int k = 0; k < 200; ++k) {
    std::array<double, 4> q;
    for (double& x : q) x = static_cast<double>(gen() % 5) / 4.0;
    BanditState a = with_q(q, 0.0);
    for (double& x : q) x += 0.375;
    BanditState b = with_q(q, 0.0);
    CHECK(select_action(a, rng) == select_action(b, rng));
  }
}

TEST_CASE("full exploration is uniform") {
  BanditState s = with_q({0.9, 0.0, 0.0, 0.0}, 1.0);
  Rng rng(7);
  const int n = 100000;
  for (int i = 0; i < n; ++i) select_action(s, rng);
  for (long long c : s.counts) CHECK(std::abs(c / double(n) - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("constant step-size update") {
  BanditState s = with_q({0.0, 0.0, 0.0, 0.0}, 0.1);
  update_q(s, StrategyId::DepthProb, 1.0);
  CHECK(s.q[0] == doctest::Approx(0.1));
  CHECK(s.q[1] == 0.0);

  BanditState h(BanditParams{0.1, 0.5, 0.0});
  update_q(h, StrategyId::Combined, 1.0);
  CHECK(h.q[3] == 0.5);
  update_q(h, StrategyId::Combined, 0.0);
  CHECK(h.q[3] == 0.25);
  CHECK(h.q[0] == 0.0);
}

TEST_CASE("recursion matches the closed form and stays in the reward hull") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = 0.01 + 0.99 * u(gen);
    const double q0 = u(gen);
    BanditState s(BanditParams{0.1, alpha, q0});
    std::vector<double> rewards;
    double lo = q0, hi = q0;
    const int n = 1 + static_cast<int>(gen() % 300);
    for (int i = 0; i < n; ++i) {
      const double r = u(gen);
      rewards.push_back(r);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      update_q(s, StrategyId::VelEntropy, r);
      CHECK((s.q[2] >= lo - 1e-15 && s.q[2] <= hi + 1e-15));
    }
    CHECK(std::abs(s.q[2] - oracle::bandit_closed_form(q0, alpha, rewards)) <= 1e-12);
  }
}

TEST_CASE("self-supervised reward") {
  using L = Label;
  CHECK(self_supervised_reward(forecast_of({0.9, 0.1, 0.2, 0.7}), {L::Occupied, L::Free, L::Unknown, L::Occupied}) == 1.0);
  // Predicted {A, B}; A occupied, B free, C occupied.
  CHECK(self_supervised_reward(forecast_of({0.9, 0.6, 0.1, 0.9}), {L::Occupied, L::Free, L::Occupied, L::Unknown}) == 0.5);
  CHECK(self_supervised_reward(forecast_of({0.1, 0.1, 0.1, 0.1}), {L::Occupied, L::Free, L::Unknown, L::Unknown}) == 0.0);
  CHECK(self_supervised_reward(forecast_of({0.1, 0.1, 0.1, 0.9}), {L::Free, L::Free, L::Unknown, L::Unknown}) == 1.0);
  CHECK(self_supervised_reward(forecast_of({0.5, 0.1, 0.1, 0.1}), {L::Occupied, L::Unknown, L::Unknown, L::Unknown}) == 1.0);
  CHECK_THROWS_AS(self_supervised_reward(forecast_of({0.9, 0.9, 0.9, 0.9}), ObservationGrid(4, L::Unknown)), NoObservedCells);

  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 300; ++trial) {
    const DynamicOccupancyGrid f = forecast_of({0.0, 0.0, 0.0, 0.0});
    DynamicOccupancyGrid g = f;
    ObservationGrid obs(4);
    CellMask pred(4), truth(4), seen(4);
    for (std::size_t i = 0; i < 4; ++i) {
      g.occ(i) = std::uniform_real_distribution<double>(0, 1)(gen);
      obs[i] = static_cast<Label>(gen() % 3);
      pred[i] = g.occ(i) >= 0.5;
      truth[i] = obs[i] == L::Occupied;
      seen[i] = obs[i] != L::Unknown;
    }
    if (std::none_of(seen.begin(), seen.end(), [](auto s) { return s != 0; })) continue;
    const oracle::Confusion c = oracle::confusion(pred, truth, seen);
    const double expect = c.tp + c.fp + c.fn == 0 ? 1.0 : 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn);
    const double r = self_supervised_reward(g, obs);
    CHECK(r == expect);
    CHECK((r >= 0.0 && r <= 1.0));
  }
}

}  // TEST_SUITE
