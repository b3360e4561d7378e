#pragma once

#include <filesystem>
#include <iosfwd>

#include "lcdog/grid.hpp"
#include "lcdog/observation.hpp"

namespace lcdog {

// Binary layouts (little-endian), shared header:
//   char[8] magic ("LCDOGGRD" for grids, "LCDOGOBS" for observations)
//   u32 version (=1), u32 width, u32 height, u32 particles (0 for observations)
//   f64 cell_size, f64 origin_x, f64 origin_y, f64 timestamp
// Grid body: per cell, row-major from row 0: f64 occupancy, then particles x (f64 vx, f64 vy, f64 weight).
// Observation body: one byte per cell, row-major: 0 = UNKNOWN, 1 = FREE, 2 = OCCUPIED.

void write_grid(std::ostream& out, const DynamicOccupancyGrid& grid);
DynamicOccupancyGrid read_grid(std::istream& in);
void save_grid(const std::filesystem::path& path, const DynamicOccupancyGrid& grid);
DynamicOccupancyGrid load_grid(const std::filesystem::path& path);

void write_observation(std::ostream& out, const GridGeometry& geom, const ObservationGrid& obs,
                       double timestamp);
ObservationGrid read_observation(std::istream& in, double* timestamp = nullptr);

}  // namespace lcdog
