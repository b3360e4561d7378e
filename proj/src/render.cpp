#include "lcdog/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace lcdog {

std::array<double, 3> hsv_to_rgb(double hue_deg, double s, double v) {
  double h = std::fmod(hue_deg, 360.0);
  if (h < 0.0) h += 360.0;
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

Rgb to_rgb8(const std::array<double, 3>& rgb) {
  auto q = [](double c) { return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)); };
  return {q(rgb[0]), q(rgb[1]), q(rgb[2])};
}

FrameImage render_grid(const DynamicOccupancyGrid& grid, double v_max, int scale) {
  if (!(v_max > 0.0)) throw std::invalid_argument("render: v_max must be positive");
  if (scale < 1) throw std::invalid_argument("render: scale must be >= 1");
  const GridGeometry& geom = grid.geometry();
  FrameImage img;
  img.width = geom.width() * scale;
  img.height = geom.height() * scale;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int row = 0; row < geom.height(); ++row) {
    for (int col = 0; col < geom.width(); ++col) {
      const auto i = static_cast<std::size_t>(geom.index(col, row));
      const Vec2 v = grid.mean_velocity(i);
      const double hue = std::atan2(v.y, v.x) * 180.0 / std::numbers::pi;
      const double sat = std::min(v.norm() / v_max, 1.0);
      const Rgb px = to_rgb8(hsv_to_rgb(hue, sat, std::clamp(grid.occ(i), 0.0, 1.0)));
      const int y0 = (geom.height() - 1 - row) * scale;
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) {
          img.pixels[static_cast<std::size_t>(y0 + dy) * img.width + col * scale + dx] = px;
        }
      }
    }
  }
  return img;
}

void write_ppm(std::ostream& out, const FrameImage& img) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  for (const Rgb& p : img.pixels) {
    const char bytes[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    out.write(bytes, 3);
  }
}

void save_ppm(const std::filesystem::path& path, const FrameImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_ppm(out, img);
}

}  // namespace lcdog
