/**
 * Sampling optimizer over potential-field parameters: draw (k_att, k_rep,
 * d0) around the current means, descend once per draw, score every
 * trajectory, fuse them with exponential weights and keep the sample that
 * lies closest to the fused trajectory.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rfnav/apf.hpp"
#include "rfnav/core.hpp"

namespace rfnav {

struct CostWeights {
  double length = 1.0;
  double goal_error = 1.0;
  double angle = 1.0;
  double proximity = 1.0;
};

struct SamplingConfig {
  PotentialParams mu;
  PotentialParams sigma{0.0, 0.0, 0.0};
  PotentialParams limits{1e-3, 1e-3, 0.3};
  int n_samples = 10;
  double lambda = 1.0;
  int max_resample = 20;
  double step = 0.15;
  int max_steps = 15;
  double r_drone = 0.2;
  CostWeights coeffs;

  /// sigma = (0.3 k_att, 0.3 k_rep, 0.2 d0), d0 limit = r_drone + 0.1.
  static SamplingConfig around(const PotentialParams& mu, double r_drone = 0.2) {
    SamplingConfig cfg;
    cfg.mu = mu;
    cfg.sigma = {0.3 * mu.k_att, 0.3 * mu.k_rep, 0.2 * mu.d0};
    cfg.limits = {1e-3, 1e-3, r_drone + 0.1};
    cfg.r_drone = r_drone;
    return cfg;
  }

  void validate() const {
    if (n_samples < 1 || !(lambda > 0.0) || max_resample < 1 || !(step > 0.0) || max_steps < 1)
      throw std::invalid_argument("SamplingConfig: n_samples, lambda, max_resample, step, max_steps must be positive");
    if (limits.k_att < 0.0 || limits.k_rep < 0.0 || limits.d0 < 0.0)
      throw std::invalid_argument("SamplingConfig: limits must be >= 0");
    if (sigma.k_att < 0.0 || sigma.k_rep < 0.0 || sigma.d0 < 0.0)
      throw std::invalid_argument("SamplingConfig: sigma must be >= 0");
  }
};

struct CostBreakdown {
  double L = 0.0;
  double E = 0.0;
  double A = 0.0;
  double P = 0.0;
  double total = 0.0;
};

struct Sample {
  PotentialParams params;
  Trajectory trajectory;
  CostBreakdown cost;
  double weight = 0.0;
};

struct PlanResult {
  Trajectory initial;
  std::vector<Sample> samples;
  Trajectory optimal;
  std::size_t chosen_index = 0;
  Trajectory chosen;
  PotentialParams chosen_params;
};

namespace detail {

inline double draw_above(RngStream& rng, double mu, double sigma, double limit, int max_resample) {
  for (int i = 0; i < max_resample; ++i) {
    const double v = gaussian(rng, mu, sigma);
    if (v > limit) return v;
    if (sigma == 0.0) break;
  }
  return std::max(limit + sigma / 10.0, std::nextafter(limit, std::numeric_limits<double>::infinity()));
}

}  // namespace detail

/// Independent draws for k_att, k_rep, d0 in that order, each strictly above its limit.
inline PotentialParams sample_params(const SamplingConfig& cfg, RngStream& rng) {
  PotentialParams p;
  p.k_att = detail::draw_above(rng, cfg.mu.k_att, cfg.sigma.k_att, cfg.limits.k_att, cfg.max_resample);
  p.k_rep = detail::draw_above(rng, cfg.mu.k_rep, cfg.sigma.k_rep, cfg.limits.k_rep, cfg.max_resample);
  p.d0 = detail::draw_above(rng, cfg.mu.d0, cfg.sigma.d0, cfg.limits.d0, cfg.max_resample);
  return p;
}

inline double traj_length(const Trajectory& t) {
  double len = 0.0;
  for (std::size_t i = 1; i < t.points.size(); ++i) len += distance(t.points[i - 1], t.points[i]);
  return len;
}

inline double traj_goal_error(const Trajectory& t, const Vec2& temp_goal) {
  if (t.points.empty()) throw std::invalid_argument("traj_goal_error: empty trajectory");
  return distance(t.back(), temp_goal);
}

/// Sum of absolute heading changes between consecutive non-degenerate segments.
inline double traj_angle_dev(const Trajectory& t) {
  double total = 0.0;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t i = 1; i < t.points.size(); ++i) {
    const Vec2 seg = t.points[i] - t.points[i - 1];
    if (seg.squared_norm() == 0.0) continue;
    const double h = std::atan2(seg.y, seg.x);
    if (have_prev) total += std::abs(wrap_angle(h - prev));
    prev = h;
    have_prev = true;
  }
  return total;
}

inline double traj_proximity(const Trajectory& t, std::span<const Obstacle> obstacles, double r_drone) {
  if (obstacles.empty()) return 0.0;
  double m = std::numeric_limits<double>::infinity();
  for (const Vec2& p : t.points) m = std::min(m, min_boundary(p, obstacles, r_drone));
  return 1.0 / std::max(kMinBoundary, m);
}

inline CostBreakdown trajectory_cost(const Trajectory& t, const Vec2& temp_goal, std::span<const Obstacle> obstacles,
                                     double r_drone, const CostWeights& w = {}) {
  CostBreakdown c;
  c.L = traj_length(t);
  c.E = traj_goal_error(t, temp_goal);
  c.A = traj_angle_dev(t);
  c.P = traj_proximity(t, obstacles, r_drone);
  c.total = w.length * c.L + w.goal_error * c.E + w.angle * c.A + w.proximity * c.P;
  return c;
}

inline double weight(double cost, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("weight: lambda must be > 0");
  return std::exp(-cost / lambda);
}

/**
 * exp(-(J_j - min J) / lambda). Same ratios as weight(), but the best sample
 * always gets 1 so small lambda cannot underflow the whole set.
 */
inline std::vector<double> normalized_weights(std::span<const double> costs, double lambda) {
  if (costs.empty()) return {};
  const double lo = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w;
  w.reserve(costs.size());
  for (double c : costs) w.push_back(weight(c - lo, lambda));
  return w;
}

/// Repeats the last point until the trajectory has n points; longer inputs are left alone.
inline Trajectory padded(Trajectory t, std::size_t n) {
  if (t.points.empty()) throw std::invalid_argument("padded: empty trajectory");
  while (t.points.size() < n) t.points.push_back(t.points.back());
  return t;
}

/**
 * T_opt(i) = T_init(i) + sum_j w_j (T_j(i) - T_init(i)) / sum_j w_j, as
 * vector displacements. Falls back to uniform weights when they sum to 0.
 */
inline Trajectory fuse_optimal(const Trajectory& initial, std::span<const Trajectory> samples,
                               std::span<const double> weights) {
  if (samples.size() != weights.size()) throw std::invalid_argument("fuse_optimal: samples/weights size mismatch");
  const std::size_t n = initial.points.size();
  for (const Trajectory& s : samples)
    if (s.points.size() != n) throw std::invalid_argument("fuse_optimal: trajectories must be padded to equal length");
  if (samples.empty()) return initial;

  double wsum = 0.0;
  for (double w : weights) wsum += w;
  const bool uniform = !(wsum > 0.0) || !std::isfinite(wsum);

  Trajectory out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 acc;
    for (std::size_t j = 0; j < samples.size(); ++j)
      acc += (samples[j].points[i] - initial.points[i]) * (uniform ? 1.0 : weights[j]);
    out.points.push_back(initial.points[i] + acc / (uniform ? static_cast<double>(samples.size()) : wsum));
  }
  return out;
}

inline double summed_distance(const Trajectory& a, const Trajectory& b) {
  const std::size_t n = std::min(a.points.size(), b.points.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += distance(a.points[i], b.points[i]);
  return s;
}

/// Index of the sample with the smallest summed pointwise distance; first wins ties.
inline std::size_t closest_sample(const Trajectory& optimal, std::span<const Trajectory> samples) {
  if (samples.empty()) throw std::invalid_argument("closest_sample: no samples");
  std::size_t best = 0;
  double best_d = summed_distance(optimal, samples[0]);
  for (std::size_t j = 1; j < samples.size(); ++j) {
    const double d = summed_distance(optimal, samples[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

/**
 * One replanning cycle. Sample j draws from rng.split(j). The initial
 * trajectory uses the means; if that descend throws, it is retried once
 * with d0 halved.
 */
inline PlanResult plan_cycle(const Vec2& start, const Vec2& temp_goal, std::span<const Obstacle> obstacles,
                             const SamplingConfig& cfg, const RngStream& rng) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(cfg.max_steps) + 1;
  FieldContext ctx{temp_goal, {obstacles.begin(), obstacles.end()}, cfg.mu, cfg.r_drone};

  PlanResult res;
  try {
    res.initial = descend(start, ctx, cfg.step, cfg.max_steps);
  } catch (const std::domain_error&) {
    ctx.params.d0 *= 0.5;
    res.initial = descend(start, ctx, cfg.step, cfg.max_steps);
  }
  res.initial = padded(std::move(res.initial), n);

  std::vector<Trajectory> trajs;
  std::vector<double> costs;
  for (int j = 0; j < cfg.n_samples; ++j) {
    RngStream stream = rng.split(static_cast<std::uint64_t>(j));
    Sample s;
    s.params = sample_params(cfg, stream);
    ctx.params = s.params;
    s.trajectory = padded(descend(start, ctx, cfg.step, cfg.max_steps), n);
    s.cost = trajectory_cost(s.trajectory, temp_goal, obstacles, cfg.r_drone, cfg.coeffs);
    costs.push_back(s.cost.total);
    trajs.push_back(s.trajectory);
    res.samples.push_back(std::move(s));
  }
  const std::vector<double> w = normalized_weights(costs, cfg.lambda);
  for (std::size_t j = 0; j < w.size(); ++j) res.samples[j].weight = w[j];

  res.optimal = fuse_optimal(res.initial, trajs, w);
  res.chosen_index = closest_sample(res.optimal, trajs);
  res.chosen = res.samples[res.chosen_index].trajectory;
  res.chosen_params = res.samples[res.chosen_index].params;
  return res;
}

}  // namespace rfnav
