#include "lcdog/policies.hpp"

#include <cmath>
#include <numbers>

namespace lcdog {

std::string_view strategy_name(StrategyId s) {
  switch (s) {
    case StrategyId::DepthProb: return "depth";
    case StrategyId::OccEntropy: return "occ";
    case StrategyId::VelEntropy: return "vel";
    case StrategyId::Combined: return "cmb";
  }
  return "?";
}

std::optional<StrategyId> parse_strategy(std::string_view name) {
  for (StrategyId s : kAllStrategies) {
    if (strategy_name(s) == name) return s;
  }
  return std::nullopt;
}

DepthProbProfile depth_prob_profile(const DynamicOccupancyGrid& grid, std::span<const RayCell> ray) {
  DepthProbProfile p;
  p.depth.resize(ray.size());
  p.visibility.resize(ray.size());
  double vis = 1.0;
  for (std::size_t n = 0; n < ray.size(); ++n) {
    const double w = grid.occ(static_cast<std::size_t>(ray[n].cell));
    p.depth[n] = vis * w;
    vis *= 1.0 - w;
    p.visibility[n] = vis;
  }
  return p;
}

double occ_entropy(double omega) {
  double h = 0.0;
  if (omega > 0.0) h -= omega * std::log2(omega);
  if (omega < 1.0) h -= (1.0 - omega) * std::log2(1.0 - omega);
  return h;
}

double gaussian_entropy_bits(const Cov2& cov) {
  constexpr double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  // det(2*pi*e*S) for a 2x2 S.
  return 0.5 * std::log2(two_pi_e * two_pi_e * cov.det());
}

double vel_entropy(std::span<const Vec2> velocities, std::span<const double> weights) {
  return gaussian_entropy_bits(fit_gaussian(velocities, weights).cov);
}

double combined_score(double omega, std::span<const Vec2> velocities,
                      std::span<const double> weights) {
  if (omega == 0.0) return occ_entropy(omega);
  return occ_entropy(omega) + omega * vel_entropy(velocities, weights);
}

double info_gain_cell(double omega, double false_positive, double false_negative) {
  const double p_detect = omega * (1.0 - false_negative) + (1.0 - omega) * false_positive;
  return occ_entropy(p_detect) - omega * occ_entropy(false_negative) -
         (1.0 - omega) * occ_entropy(false_positive);
}

namespace {

double cell_score(const DynamicOccupancyGrid& g, StrategyId s, CellIndex c) {
  const auto i = static_cast<std::size_t>(c);
  switch (s) {
    case StrategyId::OccEntropy: return occ_entropy(g.occ(i));
    case StrategyId::VelEntropy: return vel_entropy(g.velocities(i), g.weights(i));
    case StrategyId::Combined: return combined_score(g.occ(i), g.velocities(i), g.weights(i));
    case StrategyId::DepthProb: break;
  }
  return 0.0;
}

int best_on_ray(const DynamicOccupancyGrid& g, StrategyId s, std::span<const RayCell> ray) {
  const GridGeometry& geom = g.geometry();
  const RangeSpan span = in_range(ray, geom.r_min(), geom.r_max());
  if (span.size() == 0) return kNoControl;
  int best = kNoControl;
  double best_score = 0.0;
  if (s == StrategyId::DepthProb) {
    double vis = 1.0;
    for (std::size_t n = 0; n < span.end; ++n) {
      const double w = g.occ(static_cast<std::size_t>(ray[n].cell));
      const double pd = vis * w;
      vis *= 1.0 - w;
      if (n >= span.begin && (best == kNoControl || pd > best_score)) {
        best = static_cast<int>(n);
        best_score = pd;
      }
    }
    return best;
  }
  for (std::size_t n = span.begin; n < span.end; ++n) {
    const double score = cell_score(g, s, ray[n].cell);
    if (best == kNoControl || score > best_score) {
      best = static_cast<int>(n);
      best_score = score;
    }
  }
  return best;
}

}  // namespace

std::vector<double> ray_scores(const DynamicOccupancyGrid& forecast, StrategyId strategy,
                               std::span<const RayCell> ray) {
  if (strategy == StrategyId::DepthProb) return depth_prob_profile(forecast, ray).depth;
  std::vector<double> out(ray.size());
  for (std::size_t n = 0; n < ray.size(); ++n) out[n] = cell_score(forecast, strategy, ray[n].cell);
  return out;
}

Curtain place_curtain(const DynamicOccupancyGrid& forecast, StrategyId strategy,
                      const CameraRayTable& rays) {
  Curtain c;
  c.control.assign(rays.num_rays(), kNoControl);
  const auto n = static_cast<std::ptrdiff_t>(rays.num_rays());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    c.control[kk] = best_on_ray(forecast, strategy, rays.ray(kk));
  }
  return c;
}

namespace ref {

Curtain place_curtain(const DynamicOccupancyGrid& forecast, StrategyId strategy,
                      const CameraRayTable& rays) {
  const GridGeometry& geom = forecast.geometry();
  Curtain c;
  c.control.assign(rays.num_rays(), kNoControl);
  for (std::size_t k = 0; k < rays.num_rays(); ++k) {
    const auto ray = rays.ray(k);
    const std::vector<double> scores = ray_scores(forecast, strategy, ray);
    const RangeSpan span = in_range(ray, geom.r_min(), geom.r_max());
    for (std::size_t n = span.begin; n < span.end; ++n) {
      if (c.control[k] == kNoControl || scores[n] > scores[static_cast<std::size_t>(c.control[k])]) {
        c.control[k] = static_cast<int>(n);
      }
    }
  }
  return c;
}

}  // namespace ref

}  // namespace lcdog
