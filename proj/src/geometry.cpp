#include "lcdog/geometry.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace lcdog {

GridGeometry::GridGeometry(const GeometryParams& p)
    : width_(p.width_cells),
      height_(p.height_cells),
      cell_size_(p.cell_size),
      origin_(p.origin),
      sensor_pos_(p.sensor_pos),
      fov_(p.fov),
      num_rays_(p.num_rays),
      r_min_(p.r_min),
      r_max_(p.r_max) {
  if (width_ < 1 || height_ < 1) throw GeometryError("grid must have at least one cell per axis");
  if (!(cell_size_ > 0.0)) throw GeometryError("cell_size must be positive");
  if (!(fov_ > 0.0 && fov_ <= std::numbers::pi)) throw GeometryError("fov must lie in (0, pi]");
  if (num_rays_ < 1) throw GeometryError("num_rays must be at least 1");
  if (!(r_min_ >= 0.0 && r_min_ < r_max_)) throw GeometryError("need 0 <= r_min < r_max");
  if (std::isnan(sensor_pos_.x) || std::isnan(sensor_pos_.y)) {
    sensor_pos_ = cell_center(index(width_ / 2, 0));
  }
  if (!contains(sensor_pos_)) throw GeometryError("sensor must lie inside the grid");
}

bool GridGeometry::contains(Vec2 p) const {
  const Vec2 e = extent();
  return p.x >= origin_.x && p.y >= origin_.y && p.x <= origin_.x + e.x &&
         p.y <= origin_.y + e.y;
}

CellIndex GridGeometry::cell_at(Vec2 p) const {
  int c = static_cast<int>(std::floor((p.x - origin_.x) / cell_size_));
  int r = static_cast<int>(std::floor((p.y - origin_.y) / cell_size_));
  c = std::clamp(c, 0, width_ - 1);
  r = std::clamp(r, 0, height_ - 1);
  return index(c, r);
}

CellIndex GridGeometry::cell_at_open(Vec2 p) const {
  const double fx = std::floor((p.x - origin_.x) / cell_size_);
  const double fy = std::floor((p.y - origin_.y) / cell_size_);
  if (!(fx >= 0.0 && fy >= 0.0 && fx < width_ && fy < height_)) return kNoCell;
  return index(static_cast<int>(fx), static_cast<int>(fy));
}

Vec2 GridGeometry::cell_center(CellIndex i) const {
  return {origin_.x + (col_of(i) + 0.5) * cell_size_, origin_.y + (row_of(i) + 0.5) * cell_size_};
}

double GridGeometry::ray_angle(int k) const {
  const double step = fov_ / num_rays_;
  return std::numbers::pi / 2.0 - fov_ / 2.0 + (k + 0.5) * step;
}

namespace {

// Amanatides–Woo stepping over the parameter t in [0, 1] of from + t*(to-from).
// Exact corner crossings emit both side neighbours before the diagonal cell.
template <typename Emit>
void walk(const GridGeometry& g, Vec2 from, Vec2 to, Emit&& emit) {
  const double cs = g.cell_size();
  const Vec2 o = g.origin();
  const CellIndex start = g.cell_at(from);
  const CellIndex end = g.cell_at(to);
  int col = g.col_of(start);
  int row = g.row_of(start);
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  constexpr double inf = std::numeric_limits<double>::infinity();

  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
  if (step_x != 0) {
    const double boundary = o.x + (col + (step_x > 0 ? 1 : 0)) * cs;
    t_max_x = (boundary - from.x) / dx;
    t_delta_x = cs / std::abs(dx);
  }
  if (step_y != 0) {
    const double boundary = o.y + (row + (step_y > 0 ? 1 : 0)) * cs;
    t_max_y = (boundary - from.y) / dy;
    t_delta_y = cs / std::abs(dy);
  }

  emit(start, 0.0);
  CellIndex current = start;
  while (current != end) {
    if (t_max_x < t_max_y) {
      if (t_max_x > 1.0) break;
      col += step_x;
      if (!g.in_bounds(col, row)) break;
      current = g.index(col, row);
      emit(current, t_max_x);
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      if (t_max_y > 1.0) break;
      row += step_y;
      if (!g.in_bounds(col, row)) break;
      current = g.index(col, row);
      emit(current, t_max_y);
      t_max_y += t_delta_y;
    } else {
      const double t = t_max_x;
      if (t > 1.0 || t == inf) break;
      if (g.in_bounds(col + step_x, row)) emit(g.index(col + step_x, row), t);
      if (g.in_bounds(col, row + step_y)) emit(g.index(col, row + step_y), t);
      col += step_x;
      row += step_y;
      if (!g.in_bounds(col, row)) break;
      current = g.index(col, row);
      emit(current, t);
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
  }
}

void check_endpoints(const GridGeometry& geom, Vec2 from, Vec2 to) {
  if (!geom.contains(from) || !geom.contains(to)) {
    throw GeometryError("segment endpoint outside grid");
  }
}

}  // namespace

std::vector<CellIndex> traverse_ray(const GridGeometry& geom, Vec2 from, Vec2 to) {
  check_endpoints(geom, from, to);
  std::vector<CellIndex> cells;
  walk(geom, from, to, [&](CellIndex c, double) { cells.push_back(c); });
  return cells;
}

std::vector<RayCell> traverse_ray_ranges(const GridGeometry& geom, Vec2 from, Vec2 to) {
  check_endpoints(geom, from, to);
  const double length = (to - from).norm();
  std::vector<RayCell> cells;
  walk(geom, from, to, [&](CellIndex c, double t) { cells.push_back({c, t * length}); });
  return cells;
}

CameraRayTable build_ray_table(const GridGeometry& geom) {
  const Vec2 s = geom.sensor_pos();
  const Vec2 lo = geom.origin();
  const Vec2 hi = lo + geom.extent();
  std::vector<std::vector<RayCell>> rays(static_cast<std::size_t>(geom.num_rays()));
  for (int k = 0; k < geom.num_rays(); ++k) {
    const double a = geom.ray_angle(k);
    const Vec2 d{std::cos(a), std::sin(a)};
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double tx = d.x > 0 ? (hi.x - s.x) / d.x : (d.x < 0 ? (lo.x - s.x) / d.x : inf);
    const double ty = d.y > 0 ? (hi.y - s.y) / d.y : (d.y < 0 ? (lo.y - s.y) / d.y : inf);
    const double reach = std::min(tx, ty);
    Vec2 exit = s + reach * d;
    exit.x = std::clamp(exit.x, lo.x, hi.x);
    exit.y = std::clamp(exit.y, lo.y, hi.y);
    rays[static_cast<std::size_t>(k)] = traverse_ray_ranges(geom, s, exit);
  }
  return CameraRayTable(std::move(rays));
}

namespace ref {

CellMask los_mask(const CellMask& gt_occ, const CameraRayTable& rays) {
  CellMask mask(gt_occ.size(), 0);
  for (const auto& ray : rays.rays()) {
    for (const RayCell& rc : ray) {
      mask[static_cast<std::size_t>(rc.cell)] = 1;
      if (gt_occ[static_cast<std::size_t>(rc.cell)]) break;
    }
  }
  return mask;
}

}  // namespace ref

CellMask los_mask(const CellMask& gt_occ, const CameraRayTable& rays) {
  const auto n = static_cast<std::ptrdiff_t>(rays.num_rays());
  std::vector<std::size_t> visible(rays.num_rays(), 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto ray = rays.ray(static_cast<std::size_t>(k));
    std::size_t len = 0;
    while (len < ray.size()) {
      if (gt_occ[static_cast<std::size_t>(ray[len++].cell)]) break;
    }
    visible[static_cast<std::size_t>(k)] = len;
  }
  CellMask mask(gt_occ.size(), 0);
  for (std::size_t k = 0; k < rays.num_rays(); ++k) {
    const auto ray = rays.ray(k);
    for (std::size_t j = 0; j < visible[k]; ++j) mask[static_cast<std::size_t>(ray[j].cell)] = 1;
  }
  return mask;
}

}  // namespace lcdog
