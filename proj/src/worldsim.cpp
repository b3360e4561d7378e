#include "lcdog/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace lcdog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double reflect(double x, double lo, double hi) {
  const double len = hi - lo;
  if (len <= 0.0) return lo;
  double u = std::fmod(x - lo, 2.0 * len);
  if (u < 0.0) u += 2.0 * len;
  return lo + (u <= len ? u : 2.0 * len - u);
}

MotionSample evaluate(const Trajectory& traj, double t) {
  return std::visit(
      overloaded{
          [](const StaticPose& s) { return MotionSample{s.position, {}}; },
          [t](const Harmonic& h) {
            const double arg = kTwoPi * h.frequency * t + h.phase;
            return MotionSample{h.center + h.amplitude * std::sin(arg) * h.direction,
                                (kTwoPi * h.frequency * h.amplitude * std::cos(arg)) * h.direction};
          },
          [t](const Sinusoid& s) {
            const Vec2 normal{-s.direction.y, s.direction.x};
            double fwd = s.speed * t;
            double sign = 1.0;
            if (s.travel > 0.0) {
              const double u = std::fmod(fwd, 2.0 * s.travel);
              fwd = u <= s.travel ? u : 2.0 * s.travel - u;
              sign = u < s.travel ? 1.0 : -1.0;
            }
            const double arg = kTwoPi * s.lateral_frequency * t;
            const Vec2 pos = s.start + fwd * s.direction + s.lateral_amplitude * std::sin(arg) * normal;
            const Vec2 vel = (sign * s.speed) * s.direction +
                             (kTwoPi * s.lateral_frequency * s.lateral_amplitude * std::cos(arg)) * normal;
            return MotionSample{pos, vel};
          },
          [](const Brownian& b) { return MotionSample{b.start, {}}; },
      },
      traj);
}

void validate(const Shape& shape, const Trajectory& traj) {
  std::visit(overloaded{[](const RectShape& r) {
                          if (!(r.width > 0 && r.height > 0)) throw std::invalid_argument("rectangle dimensions must be positive");
                        },
                        [](const CircleShape& c) {
                          if (!(c.radius > 0)) throw std::invalid_argument("circle radius must be positive");
                        }},
             shape);
  std::visit(overloaded{[](const StaticPose&) {},
                        [](const Harmonic& h) {
                          if (!(h.frequency >= 0)) throw std::invalid_argument("harmonic frequency must be >= 0");
                        },
                        [](const Sinusoid& s) {
                          if (!(s.lateral_frequency >= 0)) throw std::invalid_argument("sinusoid frequency must be >= 0");
                        },
                        [](const Brownian& b) {
                          if (!(b.sigma >= 0 && b.lo.x <= b.hi.x && b.lo.y <= b.hi.y)) {
                            throw std::invalid_argument("brownian needs sigma >= 0 and lo <= hi");
                          }
                        }},
             traj);
}

}  // namespace

SceneObject::SceneObject(Shape shape, Trajectory trajectory)
    : shape_(shape), trajectory_(trajectory), state_(evaluate(trajectory_, 0.0)) {
  validate(shape_, trajectory_);
}

bool SceneObject::contains(Vec2 p) const {
  const Vec2 c = state_.position;
  return std::visit(overloaded{[&](const RectShape& r) {
                                 return p.x >= c.x - r.width / 2 && p.x < c.x + r.width / 2 &&
                                        p.y >= c.y - r.height / 2 && p.y < c.y + r.height / 2;
                               },
                               [&](const CircleShape& s) {
                                 const Vec2 d = p - c;
                                 return d.x * d.x + d.y * d.y <= s.radius * s.radius;
                               }},
                    shape_);
}

MotionSample SceneObject::step(double t, Rng& rng) {
  if (const auto* b = std::get_if<Brownian>(&trajectory_)) {
    if (t < state_time_) throw std::invalid_argument("brownian trajectories cannot step backwards");
    const double dt = t - state_time_;
    if (dt > 0.0) {
      boost::random::normal_distribution<double> nd;
      const double s = b->sigma * std::sqrt(dt);
      const double zx = nd(rng);
      const double zy = nd(rng);
      const Vec2 prev = state_.position;
      const Vec2 next{reflect(prev.x + s * zx, b->lo.x, b->hi.x),
                      reflect(prev.y + s * zy, b->lo.y, b->hi.y)};
      state_ = {next, (1.0 / dt) * (next - prev)};
      state_time_ = t;
    }
    return state_;
  }
  state_ = evaluate(trajectory_, t);
  state_time_ = t;
  return state_;
}

MotionSample step_trajectory(SceneObject& obj, double t, Rng& rng) { return obj.step(t, rng); }

Scene sim_default_scene(const GridGeometry& geom) {
  const Vec2 o = geom.origin();
  const Vec2 e = geom.extent();
  auto at = [&](double fx, double fy) { return Vec2{o.x + fx * e.x, o.y + fy * e.y}; };
  const double wall = 0.2;
  Scene s;
  s.objects.emplace_back(RectShape{e.x, wall}, StaticPose{Vec2{o.x + e.x / 2, o.y + e.y - wall / 2}});
  s.objects.emplace_back(RectShape{wall, e.y / 2}, StaticPose{Vec2{o.x + wall / 2, o.y + 0.75 * e.y}});
  s.objects.emplace_back(RectShape{0.6, 0.4}, Harmonic{at(0.5, 0.55), 1.0, 0.25, 0.0, {1.0, 0.0}});
  s.objects.emplace_back(CircleShape{0.25}, Sinusoid{at(0.25, 0.35), {1.0, 0.0}, 0.5, 0.4, 0.2, 0.5 * e.x});
  s.objects.emplace_back(CircleShape{0.3}, Brownian{at(0.6, 0.75), 0.5, at(0.3, 0.62), at(0.7, 0.85)});
  return s;
}

GroundTruth rasterize(Scene& scene, double t, const GridGeometry& geom, Rng& rng) {
  GroundTruth gt;
  gt.timestamp = t;
  gt.occ.assign(geom.num_cells(), 0);
  gt.vel.assign(geom.num_cells(), Vec2{});
  const double cs = geom.cell_size();
  const Vec2 o = geom.origin();
  for (SceneObject& obj : scene.objects) {
    const MotionSample st = obj.step(t, rng);
    const double half = std::visit(
        overloaded{[](const RectShape& r) { return 0.5 * std::max(r.width, r.height); },
                   [](const CircleShape& c) { return c.radius; }},
        obj.shape());
    const int c0 = std::max(0, static_cast<int>(std::floor((st.position.x - half - o.x) / cs)) - 1);
    const int c1 = std::min(geom.width() - 1, static_cast<int>(std::floor((st.position.x + half - o.x) / cs)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor((st.position.y - half - o.y) / cs)) - 1);
    const int r1 = std::min(geom.height() - 1, static_cast<int>(std::floor((st.position.y + half - o.y) / cs)) + 1);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const CellIndex i = geom.index(c, r);
        const auto ii = static_cast<std::size_t>(i);
        if (gt.occ[ii] || !obj.contains(geom.cell_center(i))) continue;
        gt.occ[ii] = 1;
        gt.vel[ii] = st.velocity;
      }
    }
  }
  return gt;
}

}  // namespace lcdog
