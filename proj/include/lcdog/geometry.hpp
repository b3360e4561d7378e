#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace lcdog {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
};

using CellIndex = std::int32_t;
inline constexpr CellIndex kNoCell = -1;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeometryParams {
  int width_cells = 160;
  int height_cells = 160;
  double cell_size = 0.05;
  Vec2 origin{0.0, 0.0};
  // Unset (NaN) places the sensor at the center of the bottom-middle cell.
  Vec2 sensor_pos{std::nan(""), std::nan("")};
  double fov = std::numbers::pi / 2.0;
  int num_rays = 128;
  double r_min = 0.25;
  double r_max = 9.0;
};

/// Immutable description of the 2D grid, the sensor pose and the camera fan.
///
/// Cells are indexed row-major with row 0 at `origin.y`; the sensor looks
/// along +y. The constructor rejects parameter sets that violate the grid
/// invariants, so every live instance is valid.
class GridGeometry {
 public:
  explicit GridGeometry(const GeometryParams& params = {});

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t num_cells() const { return static_cast<std::size_t>(width_) * height_; }
  double cell_size() const { return cell_size_; }
  Vec2 origin() const { return origin_; }
  Vec2 sensor_pos() const { return sensor_pos_; }
  double fov() const { return fov_; }
  int num_rays() const { return num_rays_; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  Vec2 extent() const { return {width_ * cell_size_, height_ * cell_size_}; }

  CellIndex index(int col, int row) const { return row * width_ + col; }
  int col_of(CellIndex i) const { return i % width_; }
  int row_of(CellIndex i) const { return i / width_; }
  bool in_bounds(int col, int row) const {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }
  /// True for points in the closed rectangle covered by the grid.
  bool contains(Vec2 p) const;
  /// Cell containing `p`; points on the far boundary map to the last cell.
  CellIndex cell_at(Vec2 p) const;
  /// Cell containing `p`, or kNoCell when `p` lies outside the half-open grid.
  CellIndex cell_at_open(Vec2 p) const;
  Vec2 cell_center(CellIndex i) const;
  /// Direction angle (radians, CCW from +x) of camera ray `k`.
  double ray_angle(int k) const;

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;

 private:
  int width_;
  int height_;
  double cell_size_;
  Vec2 origin_;
  Vec2 sensor_pos_;
  double fov_;
  int num_rays_;
  double r_min_;
  double r_max_;
};

struct RayCell {
  CellIndex cell;
  double range;  // distance from the sensor to where the ray enters the cell
  friend bool operator==(const RayCell&, const RayCell&) = default;
};

/// Per camera ray, the cells it crosses from the sensor out to the grid edge.
class CameraRayTable {
 public:
  CameraRayTable() = default;
  explicit CameraRayTable(std::vector<std::vector<RayCell>> rays) : rays_(std::move(rays)) {}

  std::size_t num_rays() const { return rays_.size(); }
  std::span<const RayCell> ray(std::size_t k) const { return rays_[k]; }
  const std::vector<std::vector<RayCell>>& rays() const { return rays_; }

  friend bool operator==(const CameraRayTable&, const CameraRayTable&) = default;

 private:
  std::vector<std::vector<RayCell>> rays_;
};

/// One flag per cell of a geometry.
using CellMask = std::vector<std::uint8_t>;

/// Supercover voxel traversal of the segment `from`→`to`.
/// Both endpoints must lie inside the grid; throws GeometryError otherwise.
std::vector<CellIndex> traverse_ray(const GridGeometry& geom, Vec2 from, Vec2 to);

/// Same traversal, also reporting the entry distance of every cell.
std::vector<RayCell> traverse_ray_ranges(const GridGeometry& geom, Vec2 from, Vec2 to);

CameraRayTable build_ray_table(const GridGeometry& geom);

/// Cells visible from the sensor given ground-truth occupancy.
CellMask los_mask(const CellMask& gt_occ, const CameraRayTable& rays);

namespace ref {
CellMask los_mask(const CellMask& gt_occ, const CameraRayTable& rays);
}  // namespace ref

}  // namespace lcdog
