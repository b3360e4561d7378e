#include "lcdog/grid_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace lcdog {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace {

constexpr std::array<char, 8> kGridMagic{'L', 'C', 'D', 'O', 'G', 'G', 'R', 'D'};
constexpr std::array<char, 8> kObsMagic{'L', 'C', 'D', 'O', 'G', 'O', 'B', 'S'};
constexpr std::uint32_t kVersion = 1;

struct Header {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t particles = 0;
  double cell_size = 0.0;
  Vec2 origin;
  double timestamp = 0.0;
};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw GridError("truncated binary stream");
  return v;
}

void write_header(std::ostream& out, const std::array<char, 8>& magic, const Header& h) {
  out.write(magic.data(), magic.size());
  put(out, kVersion);
  put(out, h.width);
  put(out, h.height);
  put(out, h.particles);
  put(out, h.cell_size);
  put(out, h.origin.x);
  put(out, h.origin.y);
  put(out, h.timestamp);
}

Header read_header(std::istream& in, const std::array<char, 8>& magic) {
  std::array<char, 8> got{};
  in.read(got.data(), got.size());
  if (!in || got != magic) throw GridError("bad magic in binary stream");
  if (get<std::uint32_t>(in) != kVersion) throw GridError("unsupported binary format version");
  Header h;
  h.width = get<std::uint32_t>(in);
  h.height = get<std::uint32_t>(in);
  h.particles = get<std::uint32_t>(in);
  h.cell_size = get<double>(in);
  h.origin.x = get<double>(in);
  h.origin.y = get<double>(in);
  h.timestamp = get<double>(in);
  return h;
}

GridGeometry geometry_from(const Header& h) {
  GeometryParams p;
  p.width_cells = static_cast<int>(h.width);
  p.height_cells = static_cast<int>(h.height);
  p.cell_size = h.cell_size;
  p.origin = h.origin;
  return GridGeometry(p);
}

}  // namespace

void write_grid(std::ostream& out, const DynamicOccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  write_header(out, kGridMagic,
               {static_cast<std::uint32_t>(g.width()), static_cast<std::uint32_t>(g.height()),
                static_cast<std::uint32_t>(grid.particles_per_cell()), g.cell_size(), g.origin(),
                grid.timestamp()});
  for (std::size_t i = 0; i < grid.num_cells(); ++i) {
    put(out, grid.occ(i));
    const auto v = grid.velocities(i);
    const auto w = grid.weights(i);
    for (std::size_t m = 0; m < v.size(); ++m) {
      put(out, v[m].x);
      put(out, v[m].y);
      put(out, w[m]);
    }
  }
}

DynamicOccupancyGrid read_grid(std::istream& in) {
  const Header h = read_header(in, kGridMagic);
  DynamicOccupancyGrid grid(geometry_from(h), static_cast<int>(h.particles));
  grid.set_timestamp(h.timestamp);
  for (std::size_t i = 0; i < grid.num_cells(); ++i) {
    grid.occ(i) = get<double>(in);
    auto v = grid.velocities(i);
    auto w = grid.weights(i);
    for (std::size_t m = 0; m < v.size(); ++m) {
      v[m].x = get<double>(in);
      v[m].y = get<double>(in);
      w[m] = get<double>(in);
    }
  }
  return grid;
}

void save_grid(const std::filesystem::path& path, const DynamicOccupancyGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GridError("cannot open " + path.string() + " for writing");
  write_grid(out, grid);
}

DynamicOccupancyGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GridError("cannot open " + path.string());
  return read_grid(in);
}

void write_observation(std::ostream& out, const GridGeometry& geom, const ObservationGrid& obs,
                       double timestamp) {
  if (obs.size() != geom.num_cells()) throw GridError("observation size mismatch");
  write_header(out, kObsMagic,
               {static_cast<std::uint32_t>(geom.width()), static_cast<std::uint32_t>(geom.height()),
                0, geom.cell_size(), geom.origin(), timestamp});
  out.write(reinterpret_cast<const char*>(obs.data()), static_cast<std::streamsize>(obs.size()));
}

ObservationGrid read_observation(std::istream& in, double* timestamp) {
  const Header h = read_header(in, kObsMagic);
  ObservationGrid obs(static_cast<std::size_t>(h.width) * h.height);
  in.read(reinterpret_cast<char*>(obs.data()), static_cast<std::streamsize>(obs.size()));
  if (!in) throw GridError("truncated observation raster");
  for (Label l : obs) {
    if (static_cast<std::uint8_t>(l) > 2) throw GridError("invalid observation label byte");
  }
  if (timestamp) *timestamp = h.timestamp;
  return obs;
}

}  // namespace lcdog
