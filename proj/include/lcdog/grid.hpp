#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "lcdog/geometry.hpp"
#include "lcdog/observation.hpp"
#include "lcdog/rng.hpp"

namespace lcdog {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric 2x2 matrix.
struct Cov2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static Cov2 isotropic(double sigma) { return {sigma * sigma, 0.0, sigma * sigma}; }
  double det() const { return xx * yy - xy * xy; }
  bool is_psd() const;
  friend bool operator==(const Cov2&, const Cov2&) = default;
};

struct OccupancyBounds {
  double floor = 0.0;
  double ceiling = 1.0;
};

/// Noise covariances are per step. The defaults treat 0.25 m/s and half a
/// cell as per-second white-noise intensities, so one step of length dt gets
/// covariance sigma^2 * dt.
struct MotionModel {
  static constexpr double kVelNoiseRate = 0.25;    // m/s per sqrt(s)
  static constexpr double kPosNoiseCells = 0.5;    // cells per sqrt(s)

  double dt = 1.0 / 30.0;
  Cov2 vel_noise = Cov2{kVelNoiseRate * kVelNoiseRate / 30.0, 0.0, kVelNoiseRate * kVelNoiseRate / 30.0};
  Cov2 pos_noise = Cov2{0.025 * 0.025 / 30.0, 0.0, 0.025 * 0.025 / 30.0};
  double birth_prob = 0.001;
  double birth_vel_sigma = 1.0;
  double occ_floor = 0.02;
  double occ_ceiling = 0.99;
  /// Wrap particles around the grid edges instead of dropping them.
  bool torus = false;

  /// Defaults for this geometry and step length.
  static MotionModel for_geometry(const GridGeometry& geom, double dt = 1.0 / 30.0);
  static Cov2 default_vel_noise(double dt);
  static Cov2 default_pos_noise(double cell_size, double dt);
  OccupancyBounds bounds() const { return {occ_floor, occ_ceiling}; }
  void validate() const;
};

struct SensorNoiseModel {
  double false_positive = 0.02;
  double false_negative = 0.1;
  void validate() const;
};

struct UpdateStats {
  long long truncation_count = 0;
  long long cells_updated = 0;
  double mass_before = 0.0;
  double mass_after = 0.0;

  UpdateStats& operator+=(const UpdateStats& o);
};

struct Gaussian2 {
  Vec2 mean;
  Cov2 cov;
};

inline constexpr double kCovJitter = 1e-6;

/// Occupancy probability plus a fixed-size weighted velocity particle set per cell.
///
/// Storage is structure-of-arrays: particle m of cell i lives at slot i*M+m.
class DynamicOccupancyGrid {
 public:
  DynamicOccupancyGrid() = default;
  DynamicOccupancyGrid(const GridGeometry& geom, int particles_per_cell);

  const GridGeometry& geometry() const { return geom_; }
  std::size_t num_cells() const { return occ_.size(); }
  int particles_per_cell() const { return m_; }
  double timestamp() const { return timestamp_; }
  void set_timestamp(double t) { timestamp_ = t; }
  bool empty() const { return occ_.empty(); }

  double occ(std::size_t i) const { return occ_[i]; }
  double& occ(std::size_t i) { return occ_[i]; }
  std::span<const double> occupancy() const { return occ_; }
  std::span<double> occupancy() { return occ_; }

  std::span<const Vec2> velocities(std::size_t i) const {
    return std::span<const Vec2>(vel_).subspan(i * m_, m_);
  }
  std::span<Vec2> velocities(std::size_t i) { return std::span<Vec2>(vel_).subspan(i * m_, m_); }
  std::span<const double> weights(std::size_t i) const {
    return std::span<const double>(weight_).subspan(i * m_, m_);
  }
  std::span<double> weights(std::size_t i) { return std::span<double>(weight_).subspan(i * m_, m_); }

  std::span<const Vec2> all_velocities() const { return vel_; }
  std::span<const double> all_weights() const { return weight_; }

  Vec2 mean_velocity(std::size_t i) const;
  double total_mass() const;

  /// Shape-compatible: same geometry and particle count.
  bool compatible(const DynamicOccupancyGrid& other) const {
    return m_ == other.m_ && geom_ == other.geom_;
  }

  friend bool operator==(const DynamicOccupancyGrid&, const DynamicOccupancyGrid&) = default;

 private:
  GridGeometry geom_;
  int m_ = 0;
  double timestamp_ = 0.0;
  std::vector<double> occ_;
  std::vector<Vec2> vel_;
  std::vector<double> weight_;
};

struct Incoming {
  Vec2 vel;
  double mass;
};

DynamicOccupancyGrid init_grid(const GridGeometry& geom, const MotionModel& model,
                               int particles_per_cell, Rng& rng);

/// Prediction step: scatter every particle along its velocity into `dst`.
UpdateStats motion_update(const DynamicOccupancyGrid& src, DynamicOccupancyGrid& dst,
                          const MotionModel& model, Rng& rng);

/// Systematic resampling of `incoming` into `out.size()` velocities with
/// uniform weight. Zero total mass yields birth-prior draws instead.
void resample_into(std::span<const Incoming> incoming, std::span<Vec2> out, Rng& rng,
                   double birth_vel_sigma);
std::vector<Vec2> resample_particles(std::span<const Incoming> incoming, int particles, Rng& rng,
                                     double birth_vel_sigma);

/// Per-cell Bayes correction of occupancy; UNKNOWN cells and particles are untouched.
UpdateStats measurement_update(DynamicOccupancyGrid& grid, const ObservationGrid& obs,
                               const SensorNoiseModel& noise, OccupancyBounds bounds = {});

/// Posterior occupancy for one cell (no clamping).
double bayes_occupancy(double prior, Label z, const SensorNoiseModel& noise);

/// Repeated motion updates covering `horizon` seconds (a whole multiple of dt).
UpdateStats forecast(const DynamicOccupancyGrid& src, DynamicOccupancyGrid& dst,
                     const MotionModel& model, double horizon, Rng& rng,
                     DynamicOccupancyGrid* scratch = nullptr);

Gaussian2 fit_gaussian(std::span<const Vec2> velocities, std::span<const double> weights);

namespace ref {
UpdateStats motion_update(const DynamicOccupancyGrid& src, DynamicOccupancyGrid& dst,
                          const MotionModel& model, Rng& rng);
UpdateStats measurement_update(DynamicOccupancyGrid& grid, const ObservationGrid& obs,
                               const SensorNoiseModel& noise, OccupancyBounds bounds = {});
}  // namespace ref

}  // namespace lcdog
