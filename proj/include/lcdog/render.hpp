#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "lcdog/grid.hpp"

namespace lcdog {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Standard HSV to RGB; hue in degrees (any value, wrapped), s and v in [0,1].
std::array<double, 3> hsv_to_rgb(double hue_deg, double s, double v);
Rgb to_rgb8(const std::array<double, 3>& rgb);

struct FrameImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major, top row first
  Rgb at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Value = occupancy, hue = mean velocity direction, saturation = |mean velocity| / v_max.
/// Grid row 0 (nearest the sensor) ends up at the bottom of the image.
FrameImage render_grid(const DynamicOccupancyGrid& grid, double v_max = 2.0, int scale = 1);

void write_ppm(std::ostream& out, const FrameImage& img);
void save_ppm(const std::filesystem::path& path, const FrameImage& img);

}  // namespace lcdog
