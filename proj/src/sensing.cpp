#include "lcdog/sensing.hpp"

#include <algorithm>

namespace lcdog {

namespace {

void mark(ObservationGrid& obs, CellIndex c, Label l) {
  Label& cur = obs[static_cast<std::size_t>(c)];
  if (cur != Label::Occupied) cur = l;
}

void check_shape(const Curtain& curtain, const CameraRayTable& rays) {
  if (curtain.num_rays() != rays.num_rays()) throw GeometryError("curtain/ray table size mismatch");
  for (std::size_t k = 0; k < curtain.num_rays(); ++k) {
    const int p = curtain.control[k];
    if (p != kNoControl && (p < 0 || static_cast<std::size_t>(p) >= rays.ray(k).size())) {
      throw GeometryError("curtain control point off its ray");
    }
  }
}

}  // namespace

RangeSpan in_range(std::span<const RayCell> ray, double r_min, double r_max) {
  const auto lo = std::lower_bound(ray.begin(), ray.end(), r_min,
                                   [](const RayCell& c, double r) { return c.range < r; });
  const auto hi = std::upper_bound(lo, ray.end(), r_max,
                                   [](double r, const RayCell& c) { return r < c.range; });
  return {static_cast<std::size_t>(lo - ray.begin()), static_cast<std::size_t>(hi - ray.begin())};
}

void validate_curtain(const Curtain& curtain, const CameraRayTable& rays, const GridGeometry& geom) {
  check_shape(curtain, rays);
  for (std::size_t k = 0; k < curtain.num_rays(); ++k) {
    if (curtain.control[k] == kNoControl) continue;
    const double r = rays.ray(k)[static_cast<std::size_t>(curtain.control[k])].range;
    if (r < geom.r_min() || r > geom.r_max()) throw GeometryError("curtain control point out of range");
  }
}

DetectionSet image_curtain(const CellMask& gt_occ, const Curtain& curtain,
                           const SensorNoiseModel& noise, const CameraRayTable& rays, Rng& rng) {
  check_shape(curtain, rays);
  DetectionSet out(curtain.num_rays());
  for (std::size_t k = 0; k < curtain.num_rays(); ++k) {
    const int p = curtain.control[k];
    if (p == kNoControl) continue;
    const auto ray = rays.ray(k);
    bool hit = gt_occ[static_cast<std::size_t>(ray[static_cast<std::size_t>(p)].cell)] != 0;
    for (int j = 0; hit && j < p; ++j) {
      if (gt_occ[static_cast<std::size_t>(ray[static_cast<std::size_t>(j)].cell)]) hit = false;
    }
    const double u = rng.uniform();
    out[k] = hit ? !(u < noise.false_negative) : (u < noise.false_positive);
  }
  return out;
}

ObservationGrid extract_observation(const Curtain& curtain, const DetectionSet& detections,
                                    const CameraRayTable& rays, std::size_t num_cells) {
  check_shape(curtain, rays);
  if (detections.size() != curtain.num_rays()) throw GeometryError("detections/curtain size mismatch");
  ObservationGrid obs(num_cells, Label::Unknown);
  for (std::size_t k = 0; k < curtain.num_rays(); ++k) {
    const int p = curtain.control[k];
    if (p == kNoControl || !detections[k].has_value()) continue;
    const auto ray = rays.ray(k);
    const auto pos = static_cast<std::size_t>(p);
    if (*detections[k]) {
      for (std::size_t j = 0; j < pos; ++j) mark(obs, ray[j].cell, Label::Free);
      obs[static_cast<std::size_t>(ray[pos].cell)] = Label::Occupied;
    } else {
      mark(obs, ray[pos].cell, Label::Free);
    }
  }
  return obs;
}

Curtain random_curtain(const CameraRayTable& rays, const GridGeometry& geom, Rng& rng) {
  Curtain c;
  c.control.assign(rays.num_rays(), kNoControl);
  for (std::size_t k = 0; k < rays.num_rays(); ++k) {
    const RangeSpan s = in_range(rays.ray(k), geom.r_min(), geom.r_max());
    if (s.size() == 0) continue;
    c.control[k] = static_cast<int>(s.begin + rng.below(s.size()));
  }
  return c;
}

ObservationGrid lidar_scan(const CellMask& gt_occ, const CameraRayTable& rays,
                           const GridGeometry& geom, const SensorNoiseModel& noise, Rng& rng) {
  ObservationGrid obs(gt_occ.size(), Label::Unknown);
  for (std::size_t k = 0; k < rays.num_rays(); ++k) {
    const auto ray = rays.ray(k);
    const RangeSpan s = in_range(ray, geom.r_min(), geom.r_max());
    // Cells up to r_max are candidates for returns; anything farther stays unknown.
    const std::size_t reach = s.end;
    std::optional<std::size_t> hit;
    for (std::size_t j = 0; j < reach; ++j) {
      if (gt_occ[static_cast<std::size_t>(ray[j].cell)]) {
        hit = j;
        break;
      }
    }
    const double u = rng.uniform();
    std::optional<std::size_t> ret;
    if (hit) {
      if (!(u < noise.false_negative)) ret = hit;
    } else if (u < noise.false_positive && s.size() > 0) {
      ret = s.begin + rng.below(s.size());
    }
    if (ret) {
      for (std::size_t j = 0; j < *ret; ++j) mark(obs, ray[j].cell, Label::Free);
      obs[static_cast<std::size_t>(ray[*ret].cell)] = Label::Occupied;
    } else {
      for (std::size_t j = 0; j < reach; ++j) mark(obs, ray[j].cell, Label::Free);
    }
  }
  return obs;
}

}  // namespace lcdog
