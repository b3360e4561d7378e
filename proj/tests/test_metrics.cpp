#include <doctest.h>

#include <random>

#include "lcdog/metrics.hpp"
#include "oracles.hpp"

using namespace lcdog;

namespace {

void check_report_invariants(const EvalReport& r) {
  CHECK(r.tp + r.fp + r.fn + r.tn == r.n_los);
  for (double s : {r.accuracy, r.precision, r.recall, r.f1, r.iou}) CHECK((s >= 0.0 && s <= 1.0));
  CHECK(r.iou <= r.f1 + 1e-15);
  if (r.precision + r.recall > 0.0)
    CHECK(std::abs(r.f1 - 2.0 * r.precision * r.recall / (r.precision + r.recall)) <= 1e-12);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("binarize") {
  GeometryParams p;
  p.width_cells = 16;
  p.height_cells = 16;
  DynamicOccupancyGrid g{GridGeometry(p), 1};
  for (std::size_t i = 0; i < g.num_cells(); ++i) g.occ(i) = 0.02;
  for (auto b : binarize(g)) CHECK(b == 0);
  g.occ(3) = 0.5;
  CHECK(binarize(g)[3] == 1);
  CHECK_THROWS(binarize(g, 0.0));

  std::mt19937_64 gen(1);
  for (std::size_t i = 0; i < g.num_cells(); ++i) g.occ(i) = std::uniform_real_distribution<double>(0, 1)(gen);
  const CellMask m = binarize(g, 0.3);
  for (std::size_t i = 0; i < g.num_cells(); ++i) CHECK(m[i] == (g.occ(i) >= 0.3 ? 1 : 0));
}

TEST_CASE("hand-counted confusion") {
  // a, b, c, d
  const EvalReport r = eval_forecast({1, 1, 0, 0}, {0, 1, 1, 0}, {1, 1, 1, 1});
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.tn == 1);
  CHECK(r.accuracy == 0.5);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(r.f1 == 0.5);
  CHECK(r.iou == doctest::Approx(1.0 / 3.0));

  const EvalReport same = eval_forecast({1, 0, 1, 0}, {1, 0, 1, 0}, {1, 1, 1, 1});
  for (double s : {same.accuracy, same.precision, same.recall, same.f1, same.iou}) CHECK(s == 1.0);
}

TEST_CASE("degenerate cases") {
  const EvalReport empty = eval_forecast({0, 0, 1}, {0, 0, 1}, {1, 1, 0});
  CHECK(empty.precision == 1.0);
  CHECK(empty.recall == 1.0);
  CHECK(empty.f1 == 1.0);
  CHECK(empty.iou == 1.0);
  CHECK(empty.accuracy == 1.0);

  const EvalReport miss = eval_forecast({0, 0}, {1, 0}, {1, 1});
  CHECK(miss.precision == 0.0);
  CHECK(miss.recall == 0.0);
  CHECK(miss.f1 == 0.0);

  CHECK_THROWS_AS(eval_forecast({1, 0}, {1, 0}, {0, 0}), EmptyEvaluation);
  CHECK_THROWS(eval_forecast({1, 0}, {1}, {1, 1}));
}

TEST_CASE("random masks match direct counts and ignore non-LOS cells") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + gen() % 256;
    CellMask pred(n), gt(n), los(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = gen() % 3 == 0;
      gt[i] = gen() % 4 == 0;
      los[i] = gen() % 5 != 0;
    }
    los[gen() % n] = 1;
    const EvalReport r = eval_forecast(pred, gt, los);
    const oracle::Confusion c = oracle::confusion(pred, gt, los);
    CHECK(r.tp == c.tp);
    CHECK(r.fp == c.fp);
    CHECK(r.fn == c.fn);
    CHECK(r.tn == c.tn);
    check_report_invariants(r);

    CellMask p2 = pred, g2 = gt;
    for (std::size_t i = 0; i < n; ++i) {
      if (!los[i]) {
        p2[i] = !p2[i];
        g2[i] = gen() % 2;
      }
    }
    const EvalReport r2 = eval_forecast(p2, g2, los);
    CHECK(r2.tp == r.tp);
    CHECK(r2.fp == r.fp);
    CHECK(r2.fn == r.fn);
    CHECK(r2.tn == r.tn);
    CHECK(r2.f1 == r.f1);
  }
}

}  // TEST_SUITE
