#include "lcdog/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/random/normal_distribution.hpp>

namespace lcdog {

bool Cov2::is_psd() const {
  constexpr double tol = 1e-15;
  return xx >= 0.0 && yy >= 0.0 && det() >= -tol;
}

Cov2 MotionModel::default_vel_noise(double dt) {
  const double v = kVelNoiseRate * kVelNoiseRate * dt;
  return {v, 0.0, v};
}

Cov2 MotionModel::default_pos_noise(double cell_size, double dt) {
  const double s = kPosNoiseCells * cell_size;
  return {s * s * dt, 0.0, s * s * dt};
}

MotionModel MotionModel::for_geometry(const GridGeometry& geom, double dt) {
  MotionModel m;
  m.dt = dt;
  m.vel_noise = default_vel_noise(dt);
  m.pos_noise = default_pos_noise(geom.cell_size(), dt);
  return m;
}

void MotionModel::validate() const {
  if (!(dt > 0.0)) throw GridError("motion model: dt must be positive");
  if (!vel_noise.is_psd()) throw GridError("motion model: velocity noise must be PSD");
  if (!pos_noise.is_psd()) throw GridError("motion model: position noise must be PSD");
  if (!(birth_prob >= 0.0 && birth_prob < 1.0)) throw GridError("motion model: birth_prob in [0,1)");
  if (!(birth_vel_sigma >= 0.0)) throw GridError("motion model: birth_vel_sigma >= 0");
  if (!(occ_floor >= 0.0 && occ_floor < occ_ceiling && occ_ceiling <= 1.0)) {
    throw GridError("motion model: need 0 <= occ_floor < occ_ceiling <= 1");
  }
}

void SensorNoiseModel::validate() const {
  if (!(false_positive >= 0.0 && false_positive < 1.0 && false_negative >= 0.0 &&
        false_negative < 1.0)) {
    throw GridError("sensor noise rates must lie in [0,1)");
  }
  if (!(false_positive + false_negative < 1.0)) {
    throw GridError("sensor noise: false_positive + false_negative must be < 1");
  }
}

UpdateStats& UpdateStats::operator+=(const UpdateStats& o) {
  truncation_count += o.truncation_count;
  cells_updated += o.cells_updated;
  mass_after = o.mass_after;
  return *this;
}

DynamicOccupancyGrid::DynamicOccupancyGrid(const GridGeometry& geom, int particles_per_cell)
    : geom_(geom), m_(particles_per_cell) {
  if (particles_per_cell < 1) throw GridError("need at least one particle per cell");
  const std::size_t n = geom.num_cells();
  occ_.assign(n, 0.0);
  vel_.assign(n * static_cast<std::size_t>(m_), Vec2{});
  weight_.assign(n * static_cast<std::size_t>(m_), 1.0 / m_);
}

Vec2 DynamicOccupancyGrid::mean_velocity(std::size_t i) const {
  Vec2 mu;
  const auto v = velocities(i);
  const auto w = weights(i);
  for (std::size_t m = 0; m < v.size(); ++m) mu = mu + w[m] * v[m];
  return mu;
}

double DynamicOccupancyGrid::total_mass() const {
  return std::accumulate(occ_.begin(), occ_.end(), 0.0);
}

namespace {

using Normal = boost::random::normal_distribution<double>;

struct Chol2 {
  double a, b, c;  // lower-triangular [[a,0],[b,c]]

  explicit Chol2(const Cov2& s) {
    a = std::sqrt(std::max(s.xx, 0.0));
    b = a > 0.0 ? s.xy / a : 0.0;
    c = std::sqrt(std::max(s.yy - b * b, 0.0));
  }
  Vec2 apply(double z1, double z2) const { return {a * z1, b * z1 + c * z2}; }
};

struct Propagator {
  const GridGeometry& geom;
  const MotionModel& model;
  Chol2 pos_l;
  Chol2 vel_l;
  bool pos_noisy;
  bool vel_noisy;
  double inv_cs;

  Propagator(const GridGeometry& g, const MotionModel& m)
      : geom(g),
        model(m),
        pos_l(m.pos_noise),
        vel_l(m.vel_noise),
        pos_noisy(m.pos_noise.xx > 0.0 || m.pos_noise.yy > 0.0),
        vel_noisy(m.vel_noise.xx > 0.0 || m.vel_noise.yy > 0.0),
        inv_cs(1.0 / g.cell_size()) {}

  Vec2 wrap(Vec2 p) const {
    const Vec2 o = geom.origin();
    const Vec2 e = geom.extent();
    auto w = [](double v, double lo, double len) {
      double r = std::fmod(v - lo, len);
      if (r < 0) r += len;
      if (r >= len) r = 0.0;
      return lo + r;
    };
    return {w(p.x, o.x, e.x), w(p.y, o.y, e.y)};
  }

  // Moves one particle; returns destination cell (kNoCell when it leaves the grid).
  // Zero-covariance components draw nothing, so noise-free runs consume no normals.
  CellIndex move(Vec2 center, Vec2 v, Rng& r, Normal& nd, Vec2& new_vel) const {
    Vec2 target = center + model.dt * v;
    if (pos_noisy) {
      const double z1 = nd(r);
      const double z2 = nd(r);
      target = target + pos_l.apply(z1, z2);
    }
    new_vel = v;
    if (vel_noisy) {
      const double z3 = nd(r);
      const double z4 = nd(r);
      new_vel = new_vel + vel_l.apply(z3, z4);
    }
    if (model.torus) target = wrap(target);
    const Vec2 o = geom.origin();
    const double fx = std::floor((target.x - o.x) * inv_cs);
    const double fy = std::floor((target.y - o.y) * inv_cs);
    if (!(fx >= 0.0 && fy >= 0.0 && fx < geom.width() && fy < geom.height())) {
      // A wrapped point can still round onto the far edge.
      return model.torus ? geom.cell_at(target) : kNoCell;
    }
    return geom.index(static_cast<int>(fx), static_cast<int>(fy));
  }
};

// Combines the incoming particles of one destination cell. Returns whether
// the raw incoming mass had to be truncated.
bool finalize_cell(std::span<const Incoming> in, const MotionModel& model, Rng& r,
                   double& omega, std::span<Vec2> out_vel, std::span<double> out_w) {
  double raw = 0.0;
  for (const Incoming& p : in) raw += p.mass;
  const bool truncated = raw > 1.0;
  double w = std::min(raw, 1.0);
  w += model.birth_prob * (1.0 - w);
  w = std::max(std::min(w, model.occ_ceiling), model.occ_floor);
  omega = w;
  resample_into(in, out_vel, r, model.birth_vel_sigma);
  std::fill(out_w.begin(), out_w.end(), 1.0 / static_cast<double>(out_w.size()));
  return truncated;
}

void prepare_dst(const DynamicOccupancyGrid& src, DynamicOccupancyGrid& dst) {
  if (&src == &dst) throw GridError("motion update needs distinct source and destination");
  if (dst.empty()) {
    dst = DynamicOccupancyGrid(src.geometry(), src.particles_per_cell());
  } else if (!src.compatible(dst)) {
    throw GridError("motion update: geometry or particle count mismatch");
  }
}

struct Workspace {
  std::vector<CellIndex> dest;
  std::vector<Incoming> moved;
  std::vector<std::size_t> offsets;
  std::vector<Incoming> sorted;
};

}  // namespace

void resample_into(std::span<const Incoming> incoming, std::span<Vec2> out, Rng& r,
                   double birth_vel_sigma) {
  double total = 0.0;
  for (const Incoming& p : incoming) total += p.mass;
  if (!(total > 0.0)) {
    Normal nd;
    for (Vec2& v : out) {
      const double zx = nd(r);
      const double zy = nd(r);
      v = {birth_vel_sigma * zx, birth_vel_sigma * zy};
    }
    return;
  }
  const std::size_t count = out.size();
  const double step = total / static_cast<double>(count);
  const double u = r.uniform();
  std::size_t idx = 0;
  double cum = incoming[0].mass;
  for (std::size_t k = 0; k < count; ++k) {
    const double target = (u + static_cast<double>(k)) * step;
    while (cum <= target && idx + 1 < incoming.size()) cum += incoming[++idx].mass;
    out[k] = incoming[idx].vel;
  }
}

std::vector<Vec2> resample_particles(std::span<const Incoming> incoming, int particles, Rng& rng,
                                     double birth_vel_sigma) {
  if (particles < 1) throw GridError("need at least one output particle");
  std::vector<Vec2> out(static_cast<std::size_t>(particles));
  resample_into(incoming, out, rng, birth_vel_sigma);
  return out;
}

DynamicOccupancyGrid init_grid(const GridGeometry& geom, const MotionModel& model,
                               int particles_per_cell, Rng& rng) {
  model.validate();
  DynamicOccupancyGrid g(geom, particles_per_cell);
  const std::uint64_t key = rng();
  const auto n = static_cast<std::ptrdiff_t>(g.num_cells());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto cell = static_cast<std::size_t>(i);
    g.occ(cell) = model.occ_floor;
    Rng r = derive_rng(key, cell, 2);
    Normal nd;
    for (Vec2& v : g.velocities(cell)) {
      const double zx = nd(r);
      const double zy = nd(r);
      v = {model.birth_vel_sigma * zx, model.birth_vel_sigma * zy};
    }
  }
  return g;
}

UpdateStats motion_update(const DynamicOccupancyGrid& src, DynamicOccupancyGrid& dst,
                          const MotionModel& model, Rng& rng) {
  prepare_dst(src, dst);
  const GridGeometry& geom = src.geometry();
  const std::size_t n = src.num_cells();
  const std::size_t m = static_cast<std::size_t>(src.particles_per_cell());
  const std::uint64_t key = rng();
  const Propagator prop(geom, model);

  // Bind a plain reference so every OpenMP thread sees the caller's workspace.
  static thread_local Workspace tls_ws;
  Workspace& ws = tls_ws;
  ws.dest.resize(n * m);
  ws.moved.resize(n * m);
  ws.sorted.resize(n * m);
  ws.offsets.assign(n + 1, 0);

  UpdateStats stats;
  stats.mass_before = src.total_mass();

  const auto ncells = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < ncells; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    Rng r = derive_rng(key, i, 0);
    Normal nd;
    const Vec2 center = geom.cell_center(static_cast<CellIndex>(i));
    const double omega = src.occ(i);
    const auto v = src.velocities(i);
    const auto w = src.weights(i);
    for (std::size_t k = 0; k < m; ++k) {
      Vec2 nv;
      ws.dest[i * m + k] = prop.move(center, v[k], r, nd, nv);
      ws.moved[i * m + k] = {nv, omega * w[k]};
    }
  }

  // Stable counting sort by destination keeps each cell's inflow in source order.
  for (CellIndex d : ws.dest) {
    if (d != kNoCell) ++ws.offsets[static_cast<std::size_t>(d) + 1];
  }
  for (std::size_t j = 0; j < n; ++j) ws.offsets[j + 1] += ws.offsets[j];
  {
    std::vector<std::size_t> cursor(ws.offsets.begin(), ws.offsets.end() - 1);
    for (std::size_t s = 0; s < n * m; ++s) {
      const CellIndex d = ws.dest[s];
      if (d != kNoCell) ws.sorted[cursor[static_cast<std::size_t>(d)]++] = ws.moved[s];
    }
  }

  long long truncations = 0;
#pragma omp parallel for schedule(static) reduction(+ : truncations)
  for (std::ptrdiff_t jj = 0; jj < ncells; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    Rng r = derive_rng(key, j, 1);
    const std::span<const Incoming> in(ws.sorted.data() + ws.offsets[j],
                                       ws.offsets[j + 1] - ws.offsets[j]);
    if (finalize_cell(in, model, r, dst.occ(j), dst.velocities(j), dst.weights(j))) ++truncations;
  }

  dst.set_timestamp(src.timestamp() + model.dt);
  stats.truncation_count = truncations;
  stats.cells_updated = static_cast<long long>(n);
  stats.mass_after = dst.total_mass();
  return stats;
}

double bayes_occupancy(double prior, Label z, const SensorNoiseModel& noise) {
  if (z == Label::Unknown) return prior;
  const bool occupied = z == Label::Occupied;
  const double like_occ = occupied ? 1.0 - noise.false_negative : noise.false_negative;
  const double like_free = occupied ? noise.false_positive : 1.0 - noise.false_positive;
  const double num = prior * like_occ;
  const double den = num + (1.0 - prior) * like_free;
  if (!(den > 0.0)) return prior;
  return num / den;
}

UpdateStats measurement_update(DynamicOccupancyGrid& grid, const ObservationGrid& obs,
                               const SensorNoiseModel& noise, OccupancyBounds bounds) {
  if (obs.size() != grid.num_cells()) throw GridError("observation size mismatch");
  UpdateStats stats;
  stats.mass_before = grid.total_mass();
  long long updated = 0;
  const auto n = static_cast<std::ptrdiff_t>(grid.num_cells());
  auto occ = grid.occupancy();
#pragma omp parallel for schedule(static) reduction(+ : updated)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (obs[i] == Label::Unknown) continue;
    const double post = bayes_occupancy(occ[i], obs[i], noise);
    occ[i] = std::clamp(post, bounds.floor, bounds.ceiling);
    ++updated;
  }
  stats.cells_updated = updated;
  stats.mass_after = grid.total_mass();
  return stats;
}

UpdateStats forecast(const DynamicOccupancyGrid& src, DynamicOccupancyGrid& dst,
                     const MotionModel& model, double horizon, Rng& rng,
                     DynamicOccupancyGrid* scratch) {
  const double steps_f = std::round(horizon / model.dt);
  if (!(horizon > 0.0) || steps_f < 1.0 ||
      std::abs(steps_f * model.dt - horizon) > 1e-9 * std::max(1.0, horizon)) {
    throw GridError("forecast horizon must be a positive whole multiple of dt");
  }
  const auto steps = static_cast<long long>(steps_f);
  DynamicOccupancyGrid local;
  DynamicOccupancyGrid& tmp = scratch ? *scratch : local;
  UpdateStats total;
  total.mass_before = src.total_mass();
  const DynamicOccupancyGrid* cur = &src;
  for (long long k = 0; k < steps; ++k) {
    DynamicOccupancyGrid* target = ((steps - 1 - k) % 2 == 0) ? &dst : &tmp;
    total += motion_update(*cur, *target, model, rng);
    cur = target;
  }
  return total;
}

Gaussian2 fit_gaussian(std::span<const Vec2> velocities, std::span<const double> weights) {
  if (velocities.empty() || velocities.size() != weights.size()) {
    throw GridError("fit_gaussian needs a non-empty weighted particle set");
  }
  Vec2 mu;
  for (std::size_t m = 0; m < velocities.size(); ++m) mu = mu + weights[m] * velocities[m];
  Cov2 s;
  for (std::size_t m = 0; m < velocities.size(); ++m) {
    const Vec2 d = velocities[m] - mu;
    s.xx += weights[m] * d.x * d.x;
    s.xy += weights[m] * d.x * d.y;
    s.yy += weights[m] * d.y * d.y;
  }
  s.xx += kCovJitter;
  s.yy += kCovJitter;
  return {mu, s};
}

namespace ref {

UpdateStats motion_update(const DynamicOccupancyGrid& src, DynamicOccupancyGrid& dst,
                          const MotionModel& model, Rng& rng) {
  prepare_dst(src, dst);
  const GridGeometry& geom = src.geometry();
  const std::size_t n = src.num_cells();
  const std::uint64_t key = rng();
  const Propagator prop(geom, model);

  UpdateStats stats;
  stats.mass_before = src.total_mass();

  std::vector<std::vector<Incoming>> inflow(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng r = derive_rng(key, i, 0);
    Normal nd;
    const Vec2 center = geom.cell_center(static_cast<CellIndex>(i));
    const auto v = src.velocities(i);
    const auto w = src.weights(i);
    for (std::size_t k = 0; k < v.size(); ++k) {
      Vec2 nv;
      const CellIndex d = prop.move(center, v[k], r, nd, nv);
      if (d != kNoCell) inflow[static_cast<std::size_t>(d)].push_back({nv, src.occ(i) * w[k]});
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    Rng r = derive_rng(key, j, 1);
    if (finalize_cell(inflow[j], model, r, dst.occ(j), dst.velocities(j), dst.weights(j))) {
      ++stats.truncation_count;
    }
  }
  dst.set_timestamp(src.timestamp() + model.dt);
  stats.cells_updated = static_cast<long long>(n);
  stats.mass_after = dst.total_mass();
  return stats;
}

UpdateStats measurement_update(DynamicOccupancyGrid& grid, const ObservationGrid& obs,
                               const SensorNoiseModel& noise, OccupancyBounds bounds) {
  if (obs.size() != grid.num_cells()) throw GridError("observation size mismatch");
  UpdateStats stats;
  stats.mass_before = grid.total_mass();
  for (std::size_t i = 0; i < grid.num_cells(); ++i) {
    if (obs[i] == Label::Unknown) continue;
    grid.occ(i) = std::clamp(bayes_occupancy(grid.occ(i), obs[i], noise), bounds.floor,
                             bounds.ceiling);
    ++stats.cells_updated;
  }
  stats.mass_after = grid.total_mass();
  return stats;
}

}  // namespace ref

}  // namespace lcdog
