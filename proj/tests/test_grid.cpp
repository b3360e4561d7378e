#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lcdog/grid.hpp"
#include "lcdog/grid_io.hpp"
#include "oracles.hpp"

using namespace lcdog;

namespace {

GridGeometry geom(int w, int h, double cs = 0.1) {
  GeometryParams p;
  p.width_cells = w;
  p.height_cells = h;
  p.cell_size = cs;
  p.r_min = 0.0;
  p.r_max = 100.0;
  return GridGeometry(p);
}

MotionModel noiseless(double dt = 1.0) {
  MotionModel m;
  m.dt = dt;
  m.vel_noise = {};
  m.pos_noise = {};
  m.birth_prob = 0.0;
  m.occ_floor = 0.0;
  m.occ_ceiling = 1.0;
  return m;
}

/// Empty grid with every cell at `omega` and every particle at velocity `v`.
DynamicOccupancyGrid filled(const GridGeometry& g, int m, double omega, Vec2 v) {
  DynamicOccupancyGrid grid(g, m);
  for (std::size_t i = 0; i < grid.num_cells(); ++i) {
    grid.occ(i) = omega;
    for (Vec2& p : grid.velocities(i)) p = v;
  }
  return grid;
}

void check_invariants(const DynamicOccupancyGrid& g, const MotionModel& model) {
  for (std::size_t i = 0; i < g.num_cells(); ++i) {
    REQUIRE(g.occ(i) >= model.occ_floor);
    REQUIRE(g.occ(i) <= model.occ_ceiling);
    REQUIRE(g.velocities(i).size() == static_cast<std::size_t>(g.particles_per_cell()));
    double s = 0.0;
    for (double w : g.weights(i)) s += w;
    REQUIRE(std::abs(s - 1.0) <= 1e-9);
  }
}

}  // namespace

TEST_SUITE("grid") {

TEST_CASE("init_grid") {
  const GridGeometry g = geom(8, 8);
  MotionModel m;
  Rng rng(5);
  const DynamicOccupancyGrid a = init_grid(g, m, 4, rng);
  for (std::size_t i = 0; i < a.num_cells(); ++i) {
    CHECK(a.occ(i) == m.occ_floor);
    for (double w : a.weights(i)) CHECK(w == 0.25);
  }
  m.birth_vel_sigma = 0.0;
  Rng r2(5);
  const DynamicOccupancyGrid z = init_grid(g, m, 3, r2);
  for (Vec2 v : z.all_velocities()) CHECK(v == Vec2{});

  Rng r3(99), r4(99);
  CHECK(init_grid(g, MotionModel{}, 10, r3) == init_grid(g, MotionModel{}, 10, r4));
}

TEST_CASE("noise-free single cell shifts by one column") {
  const GridGeometry g = geom(5, 5, 1.0);
  const MotionModel model = noiseless(1.0);
  DynamicOccupancyGrid src = filled(g, 3, 0.0, {1.0, 0.0});
  src.occ(static_cast<std::size_t>(g.index(1, 2))) = 1.0;
  DynamicOccupancyGrid dst;
  Rng rng(1);
  motion_update(src, dst, model, rng);
  CHECK(dst.occ(static_cast<std::size_t>(g.index(2, 2))) == 1.0);
  CHECK(dst.occ(static_cast<std::size_t>(g.index(1, 2))) == 0.0);
  for (Vec2 v : dst.velocities(static_cast<std::size_t>(g.index(2, 2)))) CHECK(v == Vec2{1.0, 0.0});
  CHECK(dst.timestamp() == doctest::Approx(1.0));
}

TEST_CASE("two sources merging into one cell") {
  const GridGeometry g = geom(3, 1, 1.0);
  const MotionModel model = noiseless(1.0);
  DynamicOccupancyGrid src(g, 1);
  src.occ(0) = 0.5;
  src.velocities(0)[0] = {1.0, 0.0};
  src.occ(2) = 0.4;
  src.velocities(2)[0] = {-1.0, 0.0};
  src.velocities(1)[0] = {0.0, 5.0};  // leaves the grid
  DynamicOccupancyGrid dst;
  Rng rng(1);
  const UpdateStats st = motion_update(src, dst, model, rng);
  CHECK(dst.occ(1) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(st.truncation_count == 0);

  // The incoming weights 0.5/0.9 and 0.4/0.9 show up as resampling frequencies.
  std::vector<Incoming> in{{{1.0, 0.0}, 0.5}, {{-1.0, 0.0}, 0.4}};
  Rng r(3);
  const auto out = resample_particles(in, 9000, r, 1.0);
  long long right = 0;
  for (Vec2 v : out) right += v.x > 0;
  CHECK(static_cast<double>(right) / 9000.0 == doctest::Approx(0.5 / 0.9).epsilon(1e-3));
}

TEST_CASE("raw mass above one is truncated and counted") {
  const GridGeometry g = geom(3, 1, 1.0);
  MotionModel model = noiseless(1.0);
  model.occ_ceiling = 0.99;
  DynamicOccupancyGrid src(g, 1);
  src.occ(0) = 0.7;
  src.velocities(0)[0] = {1.0, 0.0};
  src.occ(2) = 0.6;
  src.velocities(2)[0] = {-1.0, 0.0};
  src.velocities(1)[0] = {0.0, 5.0};
  DynamicOccupancyGrid dst;
  Rng rng(1);
  const UpdateStats st = motion_update(src, dst, model, rng);
  CHECK(dst.occ(1) == 0.99);
  CHECK(st.truncation_count == 1);
}

TEST_CASE("birth mixing, floor and birth-prior particles") {
  const GridGeometry g = geom(4, 4, 1.0);
  MotionModel model = noiseless(1.0);
  model.birth_prob = 0.1;
  model.occ_floor = 0.02;
  model.occ_ceiling = 0.99;
  model.birth_vel_sigma = 0.0;
  DynamicOccupancyGrid src = filled(g, 2, 0.5, {0.0, 0.0});
  src.occ(0) = 0.0;
  for (Vec2& v : src.velocities(5)) v = {0.0, 10.0};  // cell 5 empties out
  DynamicOccupancyGrid dst;
  Rng rng(2);
  motion_update(src, dst, model, rng);
  CHECK(dst.occ(1) == doctest::Approx(0.5 + 0.1 * 0.5));
  CHECK(dst.occ(0) == doctest::Approx(0.1));
  CHECK(dst.occ(5) == doctest::Approx(0.1));
  for (Vec2 v : dst.velocities(5)) CHECK(v == Vec2{});
}

TEST_CASE("systematic resampling strata") {
  Rng rng(4);
  const std::vector<Incoming> one{{{0.3, -0.2}, 0.7}};
  for (Vec2 v : resample_particles(one, 5, rng, 1.0)) CHECK(v == Vec2{0.3, -0.2});

  const std::vector<Incoming> two{{{1.0, 0.0}, 0.75}, {{2.0, 0.0}, 0.25}};
  for (int trial = 0; trial < 200; ++trial) {
    const auto out = resample_particles(two, 4, rng, 1.0);
    int a = 0;
    for (Vec2 v : out) a += v.x == 1.0;
    CHECK(a == 3);
  }

  const std::vector<Incoming> none{{{1.0, 1.0}, 0.0}};
  const auto births = resample_particles(none, 6, rng, 0.0);
  for (Vec2 v : births) CHECK(v == Vec2{});
}

TEST_CASE("resampled mean is unbiased") {
  std::mt19937_64 gen(8);
  std::vector<Incoming> in;
  double total = 0.0;
  Vec2 mean;
  for (int k = 0; k < 7; ++k) {
    const double m = std::uniform_real_distribution<double>(0.01, 1.0)(gen);
    const Vec2 v{std::normal_distribution<double>()(gen), std::normal_distribution<double>()(gen)};
    in.push_back({v, m});
    total += m;
    mean = mean + m * v;
  }
  mean = (1.0 / total) * mean;
  double var_x = 0.0;
  for (const auto& p : in) var_x += p.mass / total * (p.vel.x - mean.x) * (p.vel.x - mean.x);
  const int trials = 10000;
  const int particles = 10;
  Rng rng(12);
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    double s = 0.0;
    for (Vec2 v : resample_particles(in, particles, rng, 1.0)) s += v.x;
    acc += s / particles;
  }
  acc /= trials;
  // Systematic resampling has at most multinomial variance, so this bound is conservative.
  const double sigma = std::sqrt(var_x / particles / trials);
  CHECK(std::abs(acc - mean.x) <= 3.0 * sigma);
}

TEST_CASE("measurement update against direct Bayes") {
  const SensorNoiseModel noise{0.05, 0.1};
  CHECK(bayes_occupancy(0.5, Label::Occupied, noise) == doctest::Approx(0.45 / 0.475).epsilon(1e-12));
  CHECK(bayes_occupancy(0.5, Label::Free, noise) == doctest::Approx(0.05 / 0.525).epsilon(1e-12));

  const GridGeometry g = geom(16, 16);
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const SensorNoiseModel nz{0.3 * u(gen), 0.3 * u(gen)};
    DynamicOccupancyGrid grid(g, 3);
    ObservationGrid obs(g.num_cells());
    for (std::size_t i = 0; i < g.num_cells(); ++i) {
      grid.occ(i) = u(gen);
      obs[i] = static_cast<Label>(gen() % 3);
      grid.velocities(i)[0] = {u(gen), u(gen)};
    }
    DynamicOccupancyGrid before = grid;
    DynamicOccupancyGrid serial = grid;
    measurement_update(grid, obs, nz);
    ref::measurement_update(serial, obs, nz);
    CHECK(grid == serial);
    for (std::size_t i = 0; i < g.num_cells(); ++i) {
      const double expect = oracle::bayes(before.occ(i), obs[i], nz.false_positive, nz.false_negative);
      CHECK(std::abs(grid.occ(i) - expect) <= 1e-12);
      if (obs[i] == Label::Unknown) CHECK(grid.occ(i) == before.occ(i));
      for (std::size_t m = 0; m < 3; ++m) {
        CHECK(grid.velocities(i)[m] == before.velocities(i)[m]);
        CHECK(grid.weights(i)[m] == before.weights(i)[m]);
      }
    }
  }
}

TEST_CASE("noise-free sensing saturates to the bounds") {
  const GridGeometry g = geom(3, 1);
  DynamicOccupancyGrid grid(g, 1);
  grid.occ(0) = 0.3;
  grid.occ(1) = 0.7;
  grid.occ(2) = 0.5;
  const ObservationGrid obs{Label::Occupied, Label::Free, Label::Unknown};
  measurement_update(grid, obs, SensorNoiseModel{0.0, 0.0}, OccupancyBounds{0.02, 0.99});
  CHECK(grid.occ(0) == 0.99);
  CHECK(grid.occ(1) == 0.02);
  CHECK(grid.occ(2) == 0.5);
}

TEST_CASE("two identical readings equal one reading with squared likelihood") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int k = 0; k < 1000; ++k) {
    const SensorNoiseModel nz{0.4 * u(gen), 0.4 * u(gen)};
    const double prior = u(gen);
    const Label z = gen() % 2 ? Label::Occupied : Label::Free;
    const double twice = bayes_occupancy(bayes_occupancy(prior, z, nz), z, nz);
    const double l1 = z == Label::Occupied ? 1.0 - nz.false_negative : nz.false_negative;
    const double l0 = z == Label::Occupied ? nz.false_positive : 1.0 - nz.false_positive;
    const double direct = prior * l1 * l1 / (prior * l1 * l1 + (1.0 - prior) * l0 * l0);
    CHECK(std::abs(twice - direct) <= 1e-12);
  }
}

TEST_CASE("forecast") {
  const GridGeometry g = geom(10, 10, 1.0);
  const MotionModel model = noiseless(0.5);
  DynamicOccupancyGrid src = filled(g, 2, 0.0, {2.0, 0.0});  // one cell per step
  src.occ(static_cast<std::size_t>(g.index(2, 3))) = 0.8;
  DynamicOccupancyGrid a, b;
  Rng r1(9), r2(9);
  forecast(src, a, model, 0.5, r1);
  motion_update(src, b, model, r2);
  CHECK(a == b);

  DynamicOccupancyGrid two;
  Rng r3(9);
  forecast(src, two, model, 1.0, r3);
  CHECK(two.occ(static_cast<std::size_t>(g.index(4, 3))) == 0.8);
  CHECK(two.timestamp() == doctest::Approx(1.0));

  DynamicOccupancyGrid bad;
  CHECK_THROWS_AS(forecast(src, bad, model, 0.7, r3), GridError);
  CHECK_THROWS_AS(forecast(src, bad, model, 0.0, r3), GridError);
}

TEST_CASE("motion update rejects mismatched buffers") {
  const GridGeometry g = geom(4, 4);
  DynamicOccupancyGrid src(g, 2);
  DynamicOccupancyGrid other(g, 3);
  Rng rng(1);
  CHECK_THROWS_AS(motion_update(src, other, MotionModel{}, rng), GridError);
  CHECK_THROWS_AS(motion_update(src, src, MotionModel{}, rng), GridError);
}

TEST_CASE("integer-cell velocities translate the grid exactly") {
  const GridGeometry g = geom(12, 12, 0.5);
  MotionModel model = noiseless(0.25);
  model.torus = true;
  std::mt19937_64 gen(2);
  DynamicOccupancyGrid src(g, 4);
  const Vec2 v{2.0 * 2, -2.0};  // (+2, -1) cells per step
  for (std::size_t i = 0; i < src.num_cells(); ++i) {
    src.occ(i) = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    for (Vec2& p : src.velocities(i)) p = v;
  }
  DynamicOccupancyGrid dst;
  Rng rng(3);
  motion_update(src, dst, model, rng);
  for (int r = 0; r < 12; ++r) {
    for (int c = 0; c < 12; ++c) {
      const auto from = static_cast<std::size_t>(g.index(c, r));
      const auto to = static_cast<std::size_t>(g.index((c + 2) % 12, (r + 11) % 12));
      CHECK(dst.occ(to) == src.occ(from));
      for (Vec2 p : dst.velocities(to)) CHECK(p == v);
    }
  }
}

TEST_CASE("torus motion conserves mass without birth") {
  const GridGeometry g = geom(24, 24, 0.1);
  MotionModel model;
  model.torus = true;
  model.birth_prob = 0.0;
  model.occ_floor = 0.0;
  model.occ_ceiling = 1.0;
  model.pos_noise = Cov2::isotropic(0.02);
  model.vel_noise = Cov2::isotropic(0.05);
  Rng rng(17);
  DynamicOccupancyGrid a = init_grid(g, model, 6, rng);
  std::mt19937_64 gen(1);
  for (std::size_t i = 0; i < a.num_cells(); ++i) a.occ(i) = 0.3 * std::uniform_real_distribution<double>(0, 1)(gen);
  DynamicOccupancyGrid b;
  for (int step = 0; step < 100; ++step) {
    const double before = a.total_mass();
    const UpdateStats st = motion_update(a, b, model, rng);
    if (st.truncation_count == 0) CHECK(std::abs(b.total_mass() - before) <= 1e-9);
    std::swap(a, b);
  }
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  GeometryParams p;
  p.width_cells = 48;
  p.height_cells = 40;
  const GridGeometry g(p);
  MotionModel model = MotionModel::for_geometry(g);
  Rng rng(31);
  DynamicOccupancyGrid src = init_grid(g, model, 5, rng);
  std::mt19937_64 gen(4);
  for (std::size_t i = 0; i < src.num_cells(); ++i) src.occ(i) = std::uniform_real_distribution<double>(0, 1)(gen);
  for (bool torus : {false, true}) {
    model.torus = torus;
    DynamicOccupancyGrid a, b;
    Rng r1(77), r2(77);
    const UpdateStats sa = motion_update(src, a, model, r1);
    const UpdateStats sb = ref::motion_update(src, b, model, r2);
    CHECK(a == b);
    CHECK(sa.truncation_count == sb.truncation_count);
    CHECK(r1 == r2);
  }
}

TEST_CASE("invariants hold along a long noisy run") {
  GeometryParams p;
  p.width_cells = 40;
  p.height_cells = 40;
  const GridGeometry g(p);
  const MotionModel model = MotionModel::for_geometry(g);
  Rng rng(8);
  DynamicOccupancyGrid a = init_grid(g, model, 10, rng);
  DynamicOccupancyGrid b;
  std::mt19937_64 gen(9);
  for (int step = 0; step < 200; ++step) {
    motion_update(a, b, model, rng);
    check_invariants(b, model);
    ObservationGrid obs(g.num_cells());
    for (auto& z : obs) z = static_cast<Label>(gen() % 3);
    measurement_update(b, obs, SensorNoiseModel{}, model.bounds());
    check_invariants(b, model);
    std::swap(a, b);
  }
}

TEST_CASE("fit_gaussian") {
  const std::vector<Vec2> same(5, Vec2{0.4, -1.0});
  const std::vector<double> w5(5, 0.2);
  const Gaussian2 g1 = fit_gaussian(same, w5);
  CHECK(g1.mean.x == doctest::Approx(0.4));
  CHECK(g1.mean.y == doctest::Approx(-1.0));
  CHECK(g1.cov.xx == doctest::Approx(kCovJitter).epsilon(1e-9));
  CHECK(g1.cov.yy == doctest::Approx(kCovJitter).epsilon(1e-9));
  CHECK(std::abs(g1.cov.xy) < 1e-15);

  const std::vector<Vec2> pm{{1.0, 0.0}, {-1.0, 0.0}};
  const std::vector<double> half{0.5, 0.5};
  const Gaussian2 g2 = fit_gaussian(pm, half);
  CHECK(g2.mean == Vec2{0.0, 0.0});
  CHECK(g2.cov.xx == doctest::Approx(1.0 + kCovJitter));
  CHECK(g2.cov.yy == doctest::Approx(kCovJitter));

  CHECK_THROWS_AS(fit_gaussian(std::vector<Vec2>{}, std::vector<double>{}), GridError);

  std::mt19937_64 gen(6);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + gen() % 12;
    std::vector<Vec2> v(m);
    std::vector<double> w(m);
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      v[k] = {n(gen), n(gen)};
      w[k] = std::uniform_real_distribution<double>(0.01, 1.0)(gen);
      s += w[k];
    }
    for (double& x : w) x /= s;
    const Gaussian2 fit = fit_gaussian(v, w);
    Vec2 mu;
    double cov[3];
    oracle::moments(v, w, mu, cov);
    CHECK(std::abs(fit.mean.x - mu.x) <= 1e-12);
    CHECK(std::abs(fit.mean.y - mu.y) <= 1e-12);
    CHECK(std::abs(fit.cov.xx - kCovJitter - cov[0]) <= 1e-12);
    CHECK(std::abs(fit.cov.xy - cov[1]) <= 1e-12);
    CHECK(std::abs(fit.cov.yy - kCovJitter - cov[2]) <= 1e-12);
    CHECK(fit.cov.is_psd());
  }
}

TEST_CASE("grid and observation serialization round trip") {
  GeometryParams p;
  p.width_cells = 7;
  p.height_cells = 5;
  const GridGeometry g(p);
  Rng rng(3);
  DynamicOccupancyGrid a = init_grid(g, MotionModel{}, 3, rng);
  a.set_timestamp(1.25);
  a.occ(4) = 0.75;
  std::stringstream ss;
  write_grid(ss, a);
  CHECK(ss.str().size() == 8 + 16 + 32 + a.num_cells() * (8 + 3 * 24));
  const DynamicOccupancyGrid b = read_grid(ss);
  CHECK(a == b);

  ObservationGrid obs(g.num_cells(), Label::Unknown);
  obs[3] = Label::Free;
  obs[9] = Label::Occupied;
  std::stringstream so;
  write_observation(so, g, obs, 0.5);
  double t = 0.0;
  CHECK(read_observation(so, &t) == obs);
  CHECK(t == 0.5);

  std::stringstream junk("not a grid at all, definitely not");
  CHECK_THROWS(read_grid(junk));
}

}  // TEST_SUITE
