#pragma once

#include <cstdint>
#include <vector>

namespace lcdog {

/// Per-cell sensing outcome. Values are the on-disk raster encoding.
enum class Label : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

using ObservationGrid = std::vector<Label>;

}  // namespace lcdog
