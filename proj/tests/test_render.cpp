#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "lcdog/grid_io.hpp"
#include "lcdog/render.hpp"

using namespace lcdog;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Runs the CLI with stdout/stderr captured to files under `dir`; returns the exit status.
int cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = std::string(LCDOG_CLI_PATH) + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                          (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lcdog_test_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

DynamicOccupancyGrid uniform(int w, int h, double occ, Vec2 v) {
  GeometryParams p;
  p.width_cells = w;
  p.height_cells = h;
  DynamicOccupancyGrid g{GridGeometry(p), 2};
  for (std::size_t i = 0; i < g.num_cells(); ++i) {
    g.occ(i) = occ;
    for (Vec2& x : g.velocities(i)) x = v;
  }
  return g;
}

const char* kSmallConfig = R"({
  "geometry": {"width_cells": 40, "height_cells": 40, "cell_size": 0.1, "num_rays": 32, "r_min": 0.1, "r_max": 3.5},
  "motion": {"particles": 4},
  "run": {"steps": 40, "eval_every": 10, "eval_horizon": 0.1}
})";

}  // namespace

TEST_SUITE("render") {

TEST_CASE("HSV corners round-trip") {
  const struct {
    double h;
    Rgb rgb;
  } corners[] = {{0, {255, 0, 0}},   {60, {255, 255, 0}},  {120, {0, 255, 0}},
                 {180, {0, 255, 255}}, {240, {0, 0, 255}}, {300, {255, 0, 255}}};
  for (const auto& c : corners) {
    const auto rgb = hsv_to_rgb(c.h, 1.0, 1.0);
    CHECK(to_rgb8(rgb) == c.rgb);
    for (double x : rgb) CHECK((x == 0.0 || x == 1.0));
  }
  CHECK(to_rgb8(hsv_to_rgb(-120, 1, 1)) == Rgb{0, 0, 255});
  CHECK(to_rgb8(hsv_to_rgb(77, 0.0, 1.0)) == Rgb{255, 255, 255});
}

TEST_CASE("render_grid pixels") {
  const FrameImage black = render_grid(uniform(5, 4, 0.0, {1.5, -0.3}));
  CHECK(black.width == 5);
  CHECK(black.height == 4);
  for (const Rgb& p : black.pixels) CHECK(p == Rgb{0, 0, 0});

  const FrameImage white = render_grid(uniform(5, 4, 1.0, {}));
  for (const Rgb& p : white.pixels) CHECK(p == Rgb{255, 255, 255});

  const FrameImage red = render_grid(uniform(3, 3, 1.0, {2.0, 0.0}), 2.0, 3);
  CHECK(red.width == 9);
  CHECK(red.height == 9);
  for (const Rgb& p : red.pixels) CHECK(p == Rgb{255, 0, 0});

  // Row 0 of the grid is the bottom image row.
  DynamicOccupancyGrid g = uniform(2, 3, 0.0, {});
  g.occ(static_cast<std::size_t>(g.geometry().index(1, 0))) = 1.0;
  const FrameImage img = render_grid(g);
  CHECK(img.at(1, 2) == Rgb{255, 255, 255});
  CHECK(img.at(1, 0) == Rgb{0, 0, 0});

  CHECK_THROWS(render_grid(g, 0.0));
  std::ostringstream ppm;
  write_ppm(ppm, img);
  CHECK(ppm.str().substr(0, 11) == "P6\n2 3\n255\n");
  CHECK(ppm.str().size() == 11 + 2 * 3 * 3);
}

TEST_CASE("cli run is reproducible and renders") {
  TempDir tmp;
  std::ofstream(tmp.path / "small.json") << kSmallConfig;
  const std::string cfg = "--config " + (tmp.path / "small.json").string();
  REQUIRE(cli(tmp.path, "run " + cfg + " --seed 7 --policy mab --out " + (tmp.path / "a").string()) == 0);
  REQUIRE(cli(tmp.path, "run " + cfg + " --seed 7 --policy mab --out " + (tmp.path / "b").string() +
                            " --snapshot-every 10") == 0);
  const std::string a = slurp(tmp.path / "a" / "metrics.jsonl");
  CHECK(!a.empty());
  CHECK(a == slurp(tmp.path / "b" / "metrics.jsonl"));
  CHECK(fs::exists(tmp.path / "a" / "final_grid.bin"));
  CHECK(fs::exists(tmp.path / "a" / "run.json"));

  REQUIRE(cli(tmp.path, "run " + cfg + " --seed 8 --policy occ --out " + (tmp.path / "c").string()) == 0);
  CHECK(a != slurp(tmp.path / "c" / "metrics.jsonl"));

  // Snapshots every 10 steps at dt = 1/30 s: t = 0 .. 4/3 s, rendered at 3 fps.
  REQUIRE(cli(tmp.path, "render --run " + (tmp.path / "b").string() + " --fps 3") == 0);
  int frames = 0;
  for (const auto& e : fs::directory_iterator(tmp.path / "b" / "frames")) {
    ++frames;
    const std::string img = slurp(e.path());
    CHECK(img.substr(0, 3) == "P6\n");
  }
  CHECK(frames == 5);

  REQUIRE(cli(tmp.path, "eval --runs " + (tmp.path / "a").string() + " " + (tmp.path / "c").string()) == 0);
  const std::string table = slurp(tmp.path / "stdout.txt");
  CHECK(table.find("F1") != std::string::npos);
  CHECK(table.find("mab") != std::string::npos);
  CHECK(table.find("occ") != std::string::npos);
}

TEST_CASE("cli renders an all-zero grid as black frames") {
  TempDir tmp;
  fs::create_directories(tmp.path / "run" / "snapshots");
  DynamicOccupancyGrid g = uniform(6, 4, 0.0, {1.0, 1.0});
  save_grid(tmp.path / "run" / "snapshots" / "grid_000000.bin", g);
  g.set_timestamp(1.0);
  save_grid(tmp.path / "run" / "snapshots" / "grid_000030.bin", g);
  REQUIRE(cli(tmp.path, "render --run " + (tmp.path / "run").string() + " --fps 2 --scale 2") == 0);
  int frames = 0;
  for (const auto& e : fs::directory_iterator(tmp.path / "run" / "frames")) {
    ++frames;
    const std::string img = slurp(e.path());
    const std::string header = "P6\n12 8\n255\n";
    REQUIRE(img.substr(0, header.size()) == header);
    CHECK(img.size() == header.size() + 12 * 8 * 3);
    CHECK(img.find_first_not_of('\0', header.size()) == std::string::npos);
  }
  CHECK(frames == 3);
}

TEST_CASE("cli errors exit nonzero with a message") {
  TempDir tmp;
  std::ofstream(tmp.path / "bad.json") << "{ \"run\": ";
  CHECK(cli(tmp.path, "run --config " + (tmp.path / "bad.json").string()) != 0);
  CHECK(slurp(tmp.path / "stderr.txt").find("JSON") != std::string::npos);
  CHECK(cli(tmp.path, "run --config " + (tmp.path / "missing.json").string()) != 0);
  CHECK(!slurp(tmp.path / "stderr.txt").empty());
  CHECK(cli(tmp.path, "run --no-such-flag 3") != 0);
  CHECK(!slurp(tmp.path / "stderr.txt").empty());
  CHECK(cli(tmp.path, "run --policy greedy --steps 1") != 0);
  CHECK(cli(tmp.path, "frobnicate") != 0);
  CHECK(cli(tmp.path, "render --run " + (tmp.path / "nothing").string() + " --fps 1") != 0);
  // Nothing was written outside the directories named on the command line.
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path)) ++entries;
  CHECK(entries == 3);  // bad.json, stdout.txt, stderr.txt
}

}  // TEST_SUITE
