/**
 * Artificial potential field: quadratic attraction to a (temporary) goal,
 * logarithmic repulsion from inflated circular obstacles, and
 * normalized-gradient descent producing fixed-step waypoints.
 */
#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "rfnav/core.hpp"

namespace rfnav {

/// Clamp for boundary distances inside the logarithm and its gradient.
inline constexpr double kMinBoundary = 1e-3;
/// Gradient norm below which descent is considered stalled.
inline constexpr double kStallGradient = 1e-6;

struct PotentialParams {
  double k_att = 1.0;
  double k_rep = 1.0;
  double d0 = 1.0;

  bool valid() const { return k_att > 0.0 && k_rep > 0.0 && d0 > 0.0; }
  bool operator==(const PotentialParams&) const = default;
};

struct Obstacle {
  Vec2 center;
  double radius = 0.0;
  int id = -1;
};

struct FieldContext {
  Vec2 goal;
  std::vector<Obstacle> obstacles;
  PotentialParams params;
  double r_drone = 0.2;

  /// Goal strictly inside some inflated obstacle.
  bool degenerate() const;
};

inline double u_att(const Vec2& q, const FieldContext& ctx) {
  return 0.5 * ctx.params.k_att * (q - ctx.goal).squared_norm();
}

/// Distance from q to the obstacle boundary inflated by the drone radius.
inline double d_boundary(const Vec2& q, const Obstacle& ob, double r_drone) {
  return distance(q, ob.center) - ob.radius - r_drone;
}

inline double min_boundary(const Vec2& q, std::span<const Obstacle> obstacles, double r_drone) {
  double m = std::numeric_limits<double>::infinity();
  for (const Obstacle& ob : obstacles) m = std::min(m, d_boundary(q, ob, r_drone));
  return m;
}

inline bool FieldContext::degenerate() const { return min_boundary(goal, obstacles, r_drone) < 0.0; }

/// Sum over obstacles within the influence range of -k_rep ln(d / d0).
inline double u_rep(const Vec2& q, const FieldContext& ctx) {
  double u = 0.0;
  for (const Obstacle& ob : ctx.obstacles) {
    const double d = d_boundary(q, ob, ctx.r_drone);
    if (d >= ctx.params.d0) continue;
    u -= ctx.params.k_rep * std::log(std::max(d, kMinBoundary) / ctx.params.d0);
  }
  return u;
}

/// Inverse-distance repulsion k_rep (1/d - 1/d0); reference only.
inline double u_rep_inverse(const Vec2& q, const FieldContext& ctx) {
  double u = 0.0;
  for (const Obstacle& ob : ctx.obstacles) {
    const double d = d_boundary(q, ob, ctx.r_drone);
    if (d >= ctx.params.d0) continue;
    u += ctx.params.k_rep * (1.0 / std::max(d, kMinBoundary) - 1.0 / ctx.params.d0);
  }
  return u;
}

inline double u_total(const Vec2& q, const FieldContext& ctx) { return u_att(q, ctx) + u_rep(q, ctx); }

/**
 * Analytic gradient of u_total. Each obstacle in range adds
 * -k_rep / d * (q - c) / |q - c|, i.e. the gradient points at the obstacle
 * and descent moves away from it. Throws at an obstacle center.
 */
inline Vec2 grad_u(const Vec2& q, const FieldContext& ctx) {
  Vec2 g = (q - ctx.goal) * ctx.params.k_att;
  for (const Obstacle& ob : ctx.obstacles) {
    const Vec2 rel = q - ob.center;
    const double r = rel.norm();
    const double d = r - ob.radius - ctx.r_drone;
    if (d >= ctx.params.d0) continue;
    if (r == 0.0) throw std::domain_error("grad_u: query at an obstacle center");
    g -= rel * (ctx.params.k_rep / (std::max(d, kMinBoundary) * r));
  }
  return g;
}

/// Gradient magnitude of the inverse-distance repulsion for one obstacle.
inline double inverse_repulsion_slope(double d_bound, double k_rep) {
  const double d = std::max(d_bound, kMinBoundary);
  return k_rep / (d * d);
}

inline Vec2 place_temp_target(const Pose& pose, const Vec2& rf_dir_world, double horizon) {
  if (std::abs(rf_dir_world.norm() - 1.0) > 1e-9) throw std::invalid_argument("place_temp_target: direction must be unit");
  return pose.position + rf_dir_world * horizon;
}

/**
 * Fixed-step normalized gradient descent from `start`.
 *
 * Each step moves `step` metres against the gradient, halving up to five
 * times when the step would raise the potential or touch an inflated
 * obstacle. Stops when the goal is within one step (appending it when it is
 * free), when the gradient vanishes, or when no halving is accepted; the
 * last two set `stalled`. Throws when `start` is inside an inflated
 * obstacle.
 */
inline Trajectory descend(const Vec2& start, const FieldContext& ctx, double step, int max_steps) {
  if (!(step > 0.0) || max_steps < 1) throw std::invalid_argument("descend: step > 0 and max_steps >= 1 required");
  if (!ctx.params.valid()) throw std::invalid_argument("descend: invalid potential parameters");
  if (min_boundary(start, ctx.obstacles, ctx.r_drone) < 0.0)
    throw std::domain_error("descend: start inside an inflated obstacle");

  Trajectory traj;
  traj.points.reserve(static_cast<std::size_t>(max_steps) + 1);
  traj.points.push_back(start);
  Vec2 q = start;
  double u = u_total(q, ctx);
  const bool goal_free = !ctx.degenerate() && min_boundary(ctx.goal, ctx.obstacles, ctx.r_drone) > 0.0;

  for (int i = 0; i < max_steps; ++i) {
    if (goal_free && distance(q, ctx.goal) < step) {
      if (q != ctx.goal) traj.points.push_back(ctx.goal);
      traj.reached = true;
      break;
    }
    const Vec2 g = grad_u(q, ctx);
    const double gn = g.norm();
    if (gn < kStallGradient) {
      traj.stalled = true;
      break;
    }
    const Vec2 dir = g / -gn;
    bool moved = false;
    double h = step;
    for (int halving = 0; halving <= 5; ++halving, h *= 0.5) {
      const Vec2 next = q + dir * h;
      if (min_boundary(next, ctx.obstacles, ctx.r_drone) <= 0.0) continue;
      const double un = u_total(next, ctx);
      if (un > u) continue;
      q = next;
      u = un;
      moved = true;
      break;
    }
    if (!moved) {
      traj.stalled = true;
      break;
    }
    traj.points.push_back(q);
  }
  return traj;
}

/// Row-major samples of u_total: value(ix, iy) at origin + (ix, iy) * resolution.
struct PotentialGrid {
  Vec2 origin;
  double resolution = 0.5;
  int nx = 0;
  int ny = 0;
  std::vector<double> values;

  double at(int ix, int iy) const { return values.at(static_cast<std::size_t>(iy) * nx + ix); }
};

inline PotentialGrid potential_grid(const FieldContext& ctx, Vec2 origin, double extent_x, double extent_y,
                                    double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("potential_grid: resolution must be > 0");
  PotentialGrid g;
  g.origin = origin;
  g.resolution = resolution;
  g.nx = static_cast<int>(std::floor(extent_x / resolution + 1e-9)) + 1;
  g.ny = static_cast<int>(std::floor(extent_y / resolution + 1e-9)) + 1;
  g.values.reserve(static_cast<std::size_t>(g.nx) * g.ny);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) g.values.push_back(u_total(origin + Vec2{ix * resolution, iy * resolution}, ctx));
  return g;
}

}  // namespace rfnav
