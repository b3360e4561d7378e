#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lcdog/geometry.hpp"
#include "lcdog/grid.hpp"
#include "lcdog/observation.hpp"
#include "lcdog/rng.hpp"

namespace lcdog {

inline constexpr int kNoControl = -1;

/// One control point per camera ray, stored as the position along that ray's
/// cell list (kNoControl when the ray is not sampled).
struct Curtain {
  std::vector<int> control;

  std::size_t num_rays() const { return control.size(); }
  CellIndex cell(const CameraRayTable& rays, std::size_t k) const {
    return control[k] == kNoControl ? kNoCell : rays.ray(k)[static_cast<std::size_t>(control[k])].cell;
  }
  friend bool operator==(const Curtain&, const Curtain&) = default;
};

/// Per ray: empty when the ray has no control point, else whether it fired.
using DetectionSet = std::vector<std::optional<bool>>;

/// Half-open span [begin, end) of ray positions whose range lies in [r_min, r_max].
struct RangeSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};
RangeSpan in_range(std::span<const RayCell> ray, double r_min, double r_max);

/// Throws GeometryError unless every control point lies on its ray within range limits.
void validate_curtain(const Curtain& curtain, const CameraRayTable& rays, const GridGeometry& geom);

DetectionSet image_curtain(const CellMask& gt_occ, const Curtain& curtain,
                           const SensorNoiseModel& noise, const CameraRayTable& rays, Rng& rng);

ObservationGrid extract_observation(const Curtain& curtain, const DetectionSet& detections,
                                    const CameraRayTable& rays, std::size_t num_cells);

Curtain random_curtain(const CameraRayTable& rays, const GridGeometry& geom, Rng& rng);

ObservationGrid lidar_scan(const CellMask& gt_occ, const CameraRayTable& rays,
                           const GridGeometry& geom, const SensorNoiseModel& noise, Rng& rng);

}  // namespace lcdog
