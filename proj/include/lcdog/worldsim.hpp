#pragma once

#include <variant>
#include <vector>

#include "lcdog/geometry.hpp"
#include "lcdog/rng.hpp"

namespace lcdog {

struct RectShape {
  double width;
  double height;
};
struct CircleShape {
  double radius;
};
using Shape = std::variant<RectShape, CircleShape>;

struct StaticPose {
  Vec2 position;
};

/// Oscillation along `direction`: center + A sin(2 pi f t + phase) d.
struct Harmonic {
  Vec2 center;
  double amplitude;
  double frequency;
  double phase;
  Vec2 direction;  // unit
};

/// Forward drift along `direction` with a lateral sine. With travel > 0 the
/// forward coordinate bounces between 0 and `travel` so the object stays in view.
struct Sinusoid {
  Vec2 start;
  Vec2 direction;  // unit
  double speed;
  double lateral_amplitude;
  double lateral_frequency;
  double travel = 0.0;
};

/// Reflected random walk of the object center inside [lo, hi].
struct Brownian {
  Vec2 start;
  double sigma;  // m / sqrt(s)
  Vec2 lo;
  Vec2 hi;
};

using Trajectory = std::variant<StaticPose, Harmonic, Sinusoid, Brownian>;

struct MotionSample {
  Vec2 position;
  Vec2 velocity;
};

class SceneObject {
 public:
  SceneObject(Shape shape, Trajectory trajectory);

  const Shape& shape() const { return shape_; }
  const Trajectory& trajectory() const { return trajectory_; }
  MotionSample state() const { return state_; }
  bool contains(Vec2 p) const;

  /// Pose and velocity at time t. Deterministic trajectories are evaluated in
  /// closed form; Brownian ones advance their internal state from the last
  /// stepped time to t (t must not go backwards).
  MotionSample step(double t, Rng& rng);

 private:
  Shape shape_;
  Trajectory trajectory_;
  MotionSample state_;
  double state_time_ = 0.0;
};

MotionSample step_trajectory(SceneObject& obj, double t, Rng& rng);

struct Scene {
  std::vector<SceneObject> objects;
};

/// Two static walls on the far and left edges plus a harmonic rectangle, a
/// sinusoidal circle and a Brownian circle.
Scene sim_default_scene(const GridGeometry& geom);

struct GroundTruth {
  CellMask occ;
  std::vector<Vec2> vel;
  double timestamp = 0.0;
};

/// Cell-center containment raster at time t; the lowest-index object wins overlaps.
GroundTruth rasterize(Scene& scene, double t, const GridGeometry& geom, Rng& rng);

}  // namespace lcdog
