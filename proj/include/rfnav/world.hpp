/**
 * Simulated environment: circular-obstacle maps with controlled cell
 * density, a field-of-view sensor that reveals obstacles incrementally,
 * algebraic circle fitting, a kinematic drone and the RF-seeking mission
 * loop that ties estimation and planning together.
 */
#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rfnav/aoa.hpp"
#include "rfnav/apf.hpp"
#include "rfnav/core.hpp"
#include "rfnav/optimizer.hpp"
#include "rfnav/rfsim.hpp"

namespace rfnav {

// ---------------------------------------------------------------- maps

/// Axis-aligned area [0, extent.x] x [0, extent.y].
struct WorldMap {
  Vec2 extent{10.0, 10.0};
  std::vector<Obstacle> obstacles;
  Vec2 start{2.0, 2.0};
  Vec2 target{8.0, 8.0};

  bool inside(const Vec2& p, double margin = 0.0) const {
    return p.x >= margin && p.y >= margin && p.x <= extent.x - margin && p.y <= extent.y - margin;
  }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate(double r_drone = 0.2, double clearance = 0.5) const {
    for (const Obstacle& ob : obstacles) {
      if (!(ob.radius > 0.0)) throw std::invalid_argument("map: obstacle radius must be > 0");
      if (!inside(ob.center, ob.radius)) throw std::invalid_argument("map: obstacle not fully inside extent");
    }
    if (!inside(start) || !inside(target)) throw std::invalid_argument("map: start/target outside extent");
    if (min_boundary(start, obstacles, r_drone) < clearance || min_boundary(target, obstacles, r_drone) < clearance)
      throw std::invalid_argument("map: start/target too close to an obstacle");
  }
};

// ---------------------------------------------------------------- density

struct DensityGrid {
  double cell = 1.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> cells;  // row-major, cells[iy * nx + ix]
  double mean = 0.0;
  double variance = 0.0;

  double at(int ix, int iy) const { return cells.at(static_cast<std::size_t>(iy) * nx + ix); }

  void update_stats() {
    mean = 0.0;
    for (double c : cells) mean += c;
    mean /= static_cast<double>(cells.size());
    variance = 0.0;
    for (double c : cells) variance += (c - mean) * (c - mean);
    variance /= static_cast<double>(cells.size());
  }
};

inline constexpr int kDensitySubcells = 64;

namespace detail {

/// Covered area of `ob` within each 1 m cell, by counting subcell centers.
template <typename Fn>
void rasterize_disk(const Obstacle& ob, int nx, int ny, double cell, Fn&& add) {
  const double h = cell / kDensitySubcells;
  const double r2 = ob.radius * ob.radius;
  const int sx0 = std::max(0, static_cast<int>(std::floor((ob.center.x - ob.radius) / h)));
  const int sy0 = std::max(0, static_cast<int>(std::floor((ob.center.y - ob.radius) / h)));
  const int sx1 = std::min(nx * kDensitySubcells - 1, static_cast<int>(std::floor((ob.center.x + ob.radius) / h)));
  const int sy1 = std::min(ny * kDensitySubcells - 1, static_cast<int>(std::floor((ob.center.y + ob.radius) / h)));
  for (int sy = sy0; sy <= sy1; ++sy) {
    const double dy = (sy + 0.5) * h - ob.center.y;
    for (int sx = sx0; sx <= sx1; ++sx) {
      const double dx = (sx + 0.5) * h - ob.center.x;
      if (dx * dx + dy * dy <= r2) add(sx / kDensitySubcells, sy / kDensitySubcells, h * h);
    }
  }
}

inline DensityGrid empty_density(const WorldMap& map) {
  DensityGrid g;
  g.nx = static_cast<int>(std::round(map.extent.x));
  g.ny = static_cast<int>(std::round(map.extent.y));
  g.cells.assign(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  return g;
}

}  // namespace detail

/// Fraction of each 1 m cell covered by obstacles; obstacles are assumed not to overlap.
inline DensityGrid obstacle_density(const WorldMap& map) {
  DensityGrid g = detail::empty_density(map);
  for (const Obstacle& ob : map.obstacles)
    detail::rasterize_disk(ob, g.nx, g.ny, g.cell, [&](int ix, int iy, double a) {
      g.cells[static_cast<std::size_t>(iy) * g.nx + ix] += a / (g.cell * g.cell);
    });
  g.update_stats();
  return g;
}

// ---------------------------------------------------------------- generator

enum class Layout {
  Random,   // centers anywhere (optionally biased towards the dense half)
  Lattice,  // centers jittered around sites offset + spacing * (i, j)
};

struct GeneratorOptions {
  double r_min = 0.3;
  double r_max = 0.8;
  double min_gap = 0.45;  // free space between neighbouring obstacle edges
  Layout layout = Layout::Random;
  double lattice_spacing = 2.0;
  double lattice_offset = 1.0;
  double jitter = 0.5;  // max |dx|, |dy| from the lattice site
  /// Probability that a random-layout center is drawn in the dense half
  /// (x < extent / 2). 0.5 is spatially uniform.
  double dense_half_prob = 0.5;
  double mean_tol = 0.1;      // relative
  double variance_tol = 0.5;  // relative
  double aim = 0.5;           // stop early once within aim * tolerance
  int max_attempts = 10000;
  Vec2 extent{10.0, 10.0};
  Vec2 start{2.0, 2.0};
  Vec2 target{8.0, 8.0};
  double r_drone = 0.2;
  double clearance = 0.5;
};

struct GenerationError : std::runtime_error {
  double best_mean;
  double best_variance;
  GenerationError(const std::string& what, double m, double v)
      : std::runtime_error(what), best_mean(m), best_variance(v) {}
};

/**
 * Local search over non-overlapping disks. Each attempt proposes adding a
 * disk, removing one, or nudging one (center and radius), and keeps the
 * move when it brings (mean, variance) closer to the targets measured in
 * units of the tolerances. Stops once both are within `aim` of their
 * tolerance; throws when the attempt budget ends outside tolerance.
 */
inline WorldMap generate_map(double target_mean, double target_variance, RngStream& rng,
                             const GeneratorOptions& opt = {}) {
  if (!(target_mean >= 0.0 && target_mean <= 0.3)) throw std::invalid_argument("generate_map: mean outside [0, 0.3]");
  if (!(opt.r_min > 0.0 && opt.r_max >= opt.r_min)) throw std::invalid_argument("generate_map: bad radius range");

  WorldMap map;
  map.extent = opt.extent;
  map.start = opt.start;
  map.target = opt.target;
  if (target_mean == 0.0) return map;

  DensityGrid grid = detail::empty_density(map);
  const double n_cells = static_cast<double>(grid.cells.size());
  double sum = 0.0;
  double sum_sq = 0.0;

  const double tv = std::max(target_variance, 1e-12);
  auto stats = [&](double s, double s2) { return std::pair{s / n_cells, s2 / n_cells - (s / n_cells) * (s / n_cells)}; };
  auto score = [&](double s, double s2) {
    const auto [m, v] = stats(s, s2);
    const double em = (m - target_mean) / (opt.mean_tol * target_mean);
    const double ev = (v - target_variance) / (opt.variance_tol * tv);
    return em * em + ev * ev;
  };
  auto within = [&](double s, double s2, double frac) {
    const auto [m, v] = stats(s, s2);
    return std::abs(m - target_mean) <= frac * opt.mean_tol * target_mean &&
           std::abs(v - target_variance) <= frac * opt.variance_tol * tv;
  };

  using Contribution = std::vector<std::pair<std::size_t, double>>;
  std::vector<double> scratch(grid.cells.size(), 0.0);
  auto contribution = [&](const Obstacle& ob) {
    std::vector<std::size_t> touched;
    detail::rasterize_disk(ob, grid.nx, grid.ny, grid.cell, [&](int ix, int iy, double a) {
      const std::size_t k = static_cast<std::size_t>(iy) * grid.nx + ix;
      if (scratch[k] == 0.0) touched.push_back(k);
      scratch[k] += a;
    });
    Contribution c;
    for (std::size_t k : touched) {
      c.emplace_back(k, scratch[k]);
      scratch[k] = 0.0;
    }
    return c;
  };
  // Sums after removing `out` and adding `in` (either may be empty).
  auto trial_sums = [&](const Contribution& out, const Contribution& in, double& s, double& s2) {
    s = sum;
    s2 = sum_sq;
    for (const auto& [k, a] : out) scratch[k] -= a;
    for (const auto& [k, a] : in) scratch[k] += a;
    auto settle = [&](std::size_t k) {
      if (scratch[k] == 0.0) return;
      const double before = grid.cells[k];
      const double after = before + scratch[k];
      s += after - before;
      s2 += after * after - before * before;
      scratch[k] = 0.0;
    };
    for (const auto& kv : out) settle(kv.first);
    for (const auto& kv : in) settle(kv.first);
  };
  auto commit = [&](const Contribution& out, const Contribution& in, double s, double s2) {
    for (const auto& [k, a] : out) grid.cells[k] -= a;
    for (const auto& [k, a] : in) grid.cells[k] += a;
    sum = s;
    sum_sq = s2;
  };

  std::vector<Vec2> sites;
  if (opt.layout == Layout::Lattice)
    for (double y = opt.lattice_offset; y < opt.extent.y; y += opt.lattice_spacing)
      for (double x = opt.lattice_offset; x < opt.extent.x; x += opt.lattice_spacing) sites.push_back({x, y});

  std::vector<Contribution> contribs;
  std::vector<std::size_t> site_of;  // lattice site per obstacle
  auto fits = [&](const Obstacle& ob, std::size_t skip) {
    if (!map.inside(ob.center, ob.radius)) return false;
    if (distance(ob.center, map.start) < ob.radius + opt.r_drone + opt.clearance ||
        distance(ob.center, map.target) < ob.radius + opt.r_drone + opt.clearance)
      return false;
    for (std::size_t i = 0; i < map.obstacles.size(); ++i)
      if (i != skip && distance(ob.center, map.obstacles[i].center) < ob.radius + map.obstacles[i].radius + opt.min_gap)
        return false;
    return true;
  };
  auto jittered = [&](const Vec2& site) {
    return site + Vec2{rng.uniform(-opt.jitter, opt.jitter), rng.uniform(-opt.jitter, opt.jitter)};
  };

  const Contribution none;
  const double half_x = opt.extent.x / 2.0;
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    if (within(sum, sum_sq, opt.aim)) break;
    const double cur = score(sum, sum_sq);
    const double u = rng.uniform();
    double s, s2;
    if (!map.obstacles.empty() && u < 0.2) {  // remove
      const auto i = static_cast<std::size_t>(rng.below(map.obstacles.size()));
      trial_sums(contribs[i], none, s, s2);
      if (score(s, s2) < cur) {
        commit(contribs[i], none, s, s2);
        map.obstacles.erase(map.obstacles.begin() + static_cast<std::ptrdiff_t>(i));
        contribs.erase(contribs.begin() + static_cast<std::ptrdiff_t>(i));
        site_of.erase(site_of.begin() + static_cast<std::ptrdiff_t>(i));
      }
      continue;
    }
    if (!map.obstacles.empty() && u < 0.5) {  // nudge
      const auto i = static_cast<std::size_t>(rng.below(map.obstacles.size()));
      Obstacle ob = map.obstacles[i];
      ob.center += Vec2{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
      ob.radius = std::clamp(ob.radius + rng.uniform(-0.03, 0.03), opt.r_min, opt.r_max);
      if (opt.layout == Layout::Lattice) {
        const Vec2 off = ob.center - sites[site_of[i]];
        if (std::abs(off.x) > opt.jitter || std::abs(off.y) > opt.jitter) continue;
      }
      if (!fits(ob, i)) continue;
      Contribution c = contribution(ob);
      trial_sums(contribs[i], c, s, s2);
      if (score(s, s2) < cur) {
        commit(contribs[i], c, s, s2);
        map.obstacles[i] = ob;
        contribs[i] = std::move(c);
      }
      continue;
    }
    Obstacle ob;  // add
    ob.radius = rng.uniform(opt.r_min, opt.r_max);
    std::size_t site = 0;
    if (opt.layout == Layout::Lattice) {
      site = static_cast<std::size_t>(rng.below(sites.size()));
      ob.center = jittered(sites[site]);
    } else {
      const bool dense = rng.uniform() < opt.dense_half_prob;
      const double x_lo = dense ? ob.radius : std::max(ob.radius, half_x);
      const double x_hi = dense ? std::min(opt.extent.x - ob.radius, half_x) : opt.extent.x - ob.radius;
      ob.center = {rng.uniform(x_lo, x_hi), rng.uniform(ob.radius, opt.extent.y - ob.radius)};
    }
    if (!fits(ob, map.obstacles.size())) continue;
    Contribution c = contribution(ob);
    trial_sums(none, c, s, s2);
    if (score(s, s2) < cur) {
      commit(none, c, s, s2);
      map.obstacles.push_back(ob);
      contribs.push_back(std::move(c));
      site_of.push_back(site);
    }
  }
  if (!within(sum, sum_sq, 1.0)) {
    const auto [m, v] = stats(sum, sum_sq);
    throw GenerationError("generate_map: targets not reached within the attempt budget", m, v);
  }
  for (std::size_t i = 0; i < map.obstacles.size(); ++i) map.obstacles[i].id = static_cast<int>(i);
  return map;
}

// ---------------------------------------------------------------- sensing

struct SensorConfig {
  double half_angle = deg2rad(45.0);
  double range = 4.0;
  bool fit_circle = false;  // reveal via a fitted boundary arc instead of the true circle
  double fit_noise = 0.0;   // metres, on arc points when fit_circle is set
  int arc_points = 36;
};

struct SensorState {
  std::set<int> revealed;
  std::vector<Obstacle> known;  // what the planner sees, in reveal order
};

/// Distance from p to the circular sector (apex, axis heading, half-angle <= pi/2, range).
inline double distance_to_sector(const Vec2& p, const Pose& apex, double half_angle, double range) {
  const Vec2 rel = p - apex.position;
  const double r = rel.norm();
  if (r == 0.0) return 0.0;
  const double off = std::abs(wrap_angle(std::atan2(rel.y, rel.x) - apex.heading));
  if (off <= half_angle) return std::max(0.0, r - range);
  double best = std::numeric_limits<double>::infinity();
  for (double side : {-1.0, 1.0}) {
    const Vec2 u = unit_from_angle(apex.heading + side * half_angle);
    const double t = std::clamp(dot(rel, u), 0.0, range);
    best = std::min(best, distance(rel, u * t));
  }
  return best;
}

/// True when some point of the obstacle's boundary circle lies in the cone.
/// The apex is assumed to be outside the obstacle.
inline bool in_fov(const Obstacle& ob, const Pose& pose, const SensorConfig& cfg) {
  return distance_to_sector(ob.center, pose, cfg.half_angle, cfg.range) <= ob.radius;
}

inline bool in_fov(const Vec2& p, const Pose& pose, const SensorConfig& cfg) {
  return distance_to_sector(p, pose, cfg.half_angle, cfg.range) == 0.0;
}

/**
 * Algebraic (Kasa) least-squares circle through `points`: solves
 * x^2 + y^2 + D x + E y + F = 0 on centroid-shifted coordinates.
 */
inline Obstacle fit_circle(std::span<const Vec2> points) {
  if (points.size() < 3) throw std::invalid_argument("fit_circle: need at least 3 points");
  Vec2 c0;
  for (const Vec2& p : points) c0 += p;
  c0 = c0 / static_cast<double>(points.size());

  Eigen::MatrixXd a(static_cast<Eigen::Index>(points.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(points.size()));
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 q = points[i] - c0;
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = q.x;
    a(r, 1) = q.y;
    a(r, 2) = 1.0;
    b(r) = -(q.x * q.x + q.y * q.y);
    suu += q.x * q.x;
    svv += q.y * q.y;
    suv += q.x * q.y;
  }
  const double spread = suu + svv;
  if (!(spread > 0.0) || suu * svv - suv * suv <= 1e-12 * spread * spread)
    throw std::domain_error("fit_circle: points are collinear");
  const Eigen::Vector3d x = a.colPivHouseholderQr().solve(b);
  Obstacle ob;
  ob.center = c0 + Vec2{-x(0) / 2.0, -x(1) / 2.0};
  ob.radius = std::sqrt(std::max(0.0, (x(0) * x(0) + x(1) * x(1)) / 4.0 - x(2)));
  return ob;
}

/**
 * Reveals every ground-truth obstacle touching the cone. With fit_circle
 * set, the revealed estimate is fitted to the boundary points that face the
 * drone and lie in the cone (at least 3 needed, otherwise the obstacle
 * stays hidden this tick). Returns the obstacles newly revealed.
 */
inline std::vector<Obstacle> sense(const WorldMap& map, SensorState& sensor, const Pose& pose,
                                   const SensorConfig& cfg, RngStream* noise = nullptr) {
  std::vector<Obstacle> fresh;
  for (const Obstacle& ob : map.obstacles) {
    if (sensor.revealed.count(ob.id) || !in_fov(ob, pose, cfg)) continue;
    Obstacle seen = ob;
    if (cfg.fit_circle) {
      std::vector<Vec2> arc;
      for (int i = 0; i < cfg.arc_points; ++i) {
        const Vec2 dir = unit_from_angle(kTwoPi * i / cfg.arc_points);
        Vec2 p = ob.center + dir * ob.radius;
        if (dot(dir, pose.position - ob.center) <= 0.0 || !in_fov(p, pose, cfg)) continue;
        if (noise && cfg.fit_noise > 0.0) p += Vec2{gaussian(*noise, 0.0, cfg.fit_noise), gaussian(*noise, 0.0, cfg.fit_noise)};
        arc.push_back(p);
      }
      if (arc.size() < 3) continue;
      try {
        seen = fit_circle(arc);
      } catch (const std::domain_error&) {
        continue;
      }
      seen.id = ob.id;
    }
    sensor.revealed.insert(ob.id);
    sensor.known.push_back(seen);
    fresh.push_back(seen);
  }
  return fresh;
}

// ---------------------------------------------------------------- drone

struct DroneState {
  Pose pose;
  double speed = 0.15;
  int waypoint_index = 0;
  std::vector<Vec2> trail;
};

/// Moves min(speed, distance) towards `waypoint` and records the new position.
inline DroneState step_drone(DroneState state, const Vec2& waypoint, double speed) {
  if (!(speed > 0.0)) throw std::invalid_argument("step_drone: speed must be > 0");
  const Vec2 rel = waypoint - state.pose.position;
  const double dist = rel.norm();
  if (dist > 0.0) {
    const Vec2 next = dist <= speed ? waypoint : state.pose.position + rel * (speed / dist);
    state.pose = Pose(next, std::atan2(rel.y, rel.x));
  }
  state.trail.push_back(state.pose.position);
  return state;
}

// ---------------------------------------------------------------- mission

enum class PlannerMode { Standard, Modified };

inline const char* to_string(PlannerMode m) { return m == PlannerMode::Standard ? "standard" : "modified"; }

enum class Outcome { Success, FailureBudget, FailureStuck, FailureCollision, FailurePlanner };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::FailureBudget: return "failure_budget";
    case Outcome::FailureStuck: return "failure_stuck";
    case Outcome::FailureCollision: return "failure_collision";
    case Outcome::FailurePlanner: return "failure_planner";
  }
  return "?";
}

struct MissionConfig {
  PlannerMode mode = PlannerMode::Modified;
  SamplingConfig sampling;  // sampling.mu doubles as the fixed standard-mode parameters
  bool frozen_means = false;
  SensorConfig sensor;
  RfConfig rf;
  double horizon = 2.0;
  double speed = 0.15;
  double success_radius = 0.5;
  int replan_at = 5;
  int budget = 200;
  double stuck_distance = 0.05;
  int stuck_window = 3;
  int rf_retries = 5;
  bool keep_samples = true;
  /// Called with exactly the obstacle list handed to the planner.
  std::function<void(std::span<const Obstacle>)> on_plan;
};

struct CycleRecord {
  int index = 0;
  Pose pose;
  bool rf_valid = false;
  Vec2 rf_dir;
  double bearing_error = 0.0;  // radians, |estimated - true|
  Vec2 temp_goal;
  PotentialParams params;
  Trajectory chosen;
  std::vector<Sample> samples;  // empty in standard mode
  Trajectory optimal;           // empty in standard mode
  std::size_t revealed = 0;
};

struct MissionRecord {
  PlannerMode mode = PlannerMode::Modified;
  Outcome outcome = Outcome::FailureBudget;
  std::vector<Vec2> trail;
  std::vector<CycleRecord> cycles;
  std::vector<int> revealed_ids;
  double straight = 0.0;
  double length = 0.0;

  bool success() const { return outcome == Outcome::Success; }
  double relative_length() const { return straight > 0.0 ? length / straight : 0.0; }
  double mean_bearing_error() const {
    double s = 0.0;
    int n = 0;
    for (const CycleRecord& c : cycles)
      if (c.rf_valid) {
        s += c.bearing_error;
        ++n;
      }
    return n ? s / n : 0.0;
  }
};

inline constexpr std::uint64_t kRfStream = 1;
inline constexpr std::uint64_t kPlannerStream = 2;
inline constexpr std::uint64_t kSensorStream = 3;

namespace detail {

inline double polyline_length(std::span<const Vec2> pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

inline bool collides(const Vec2& p, const WorldMap& map, double r_drone) {
  return min_boundary(p, map.obstacles, r_drone) < 0.0;
}

}  // namespace detail

/**
 * RF source seeking on `map`. Each cycle senses, estimates the source
 * bearing from the simulated wavefield, places a temporary target
 * `horizon` ahead (the true target once it is closer than that), plans and
 * follows the plan until its `replan_at`-th waypoint. The drone senses after
 * every step and replans early when a newly revealed obstacle blocks the
 * remaining waypoints. `rng` seeds the RF noise, planner and sensor streams.
 */
inline MissionRecord run_mission(const WorldMap& map, const MissionConfig& cfg, const RngStream& rng) {
  MissionRecord rec;
  rec.mode = cfg.mode;
  rec.straight = distance(map.start, map.target);

  const double r_drone = cfg.sampling.r_drone;
  const AntennaArray array = AntennaArray::square(cfg.rf.half_side, cfg.rf.wavelength());
  RfSource src;
  src.position = map.target;
  src.frequency = cfg.rf.frequency;
  src.amplitude = cfg.rf.amplitude;
  src.initial_phase = cfg.rf.initial_phase;

  const RngStream rf_root = rng.split(kRfStream);
  const RngStream plan_root = rng.split(kPlannerStream);
  RngStream sensor_rng = rng.split(kSensorStream);
  SensorState sensor;
  SamplingConfig sampling = cfg.sampling;

  DroneState drone;
  drone.speed = cfg.speed;
  drone.pose = Pose(map.start, 0.0);
  drone.trail.push_back(map.start);

  std::optional<Vec2> prior;
  // Tick 0 is the initial yaw towards the source; cycle c uses tick c + 1.
  auto estimate = [&](std::uint64_t tick) -> std::optional<Vec2> {
    RngStream noise = rf_root.split(tick);
    for (int attempt = 0; attempt < cfg.rf_retries; ++attempt) {
      const PhaseReading ph = measure_phases(array, drone.pose, src, cfg.rf, &noise);
      const DirectionEstimate est = estimate_direction(array, ph, drone.pose, prior);
      if (est.valid) return est.world_dir;
    }
    return std::nullopt;
  };

  if (const auto first = estimate(0)) {
    drone.pose = Pose(map.start, std::atan2(first->y, first->x));
    prior = *first;
  }

  auto finish = [&](Outcome o) {
    rec.outcome = o;
    if (o == Outcome::Success) drone.trail.push_back(map.target);
    rec.trail = drone.trail;
    rec.length = detail::polyline_length(rec.trail);
    rec.revealed_ids.assign(sensor.revealed.begin(), sensor.revealed.end());
    return rec;
  };

  std::vector<Vec2> replan_positions;
  for (int cycle = 0;; ++cycle) {
    if (cycle >= cfg.budget) return finish(Outcome::FailureBudget);
    replan_positions.push_back(drone.pose.position);
    const std::size_t w = static_cast<std::size_t>(cfg.stuck_window);
    if (replan_positions.size() > w &&
        distance(replan_positions.back(), replan_positions[replan_positions.size() - 1 - w]) < cfg.stuck_distance)
      return finish(Outcome::FailureStuck);

    sense(map, sensor, drone.pose, cfg.sensor, &sensor_rng);

    CycleRecord cr;
    cr.index = cycle;
    cr.pose = drone.pose;
    const Vec2 to_target = map.target - drone.pose.position;
    const auto dir = estimate(static_cast<std::uint64_t>(cycle) + 1);
    if (dir) {
      cr.rf_valid = true;
      cr.rf_dir = *dir;
      prior = *dir;
      cr.bearing_error = std::abs(wrap_angle(std::atan2(dir->y, dir->x) - std::atan2(to_target.y, to_target.x)));
    }
    const Vec2 heading_dir = prior ? *prior : unit_from_angle(drone.pose.heading);
    cr.temp_goal = to_target.norm() < cfg.horizon ? map.target
                                                  : place_temp_target(drone.pose, normalized(heading_dir), cfg.horizon);

    const std::vector<Obstacle> known = sensor.known;
    if (cfg.on_plan) cfg.on_plan(known);
    Trajectory plan;
    try {
      if (cfg.mode == PlannerMode::Standard) {
        FieldContext ctx{cr.temp_goal, known, sampling.mu, r_drone};
        plan = padded(descend(drone.pose.position, ctx, sampling.step, sampling.max_steps),
                      static_cast<std::size_t>(sampling.max_steps) + 1);
        cr.params = sampling.mu;
      } else {
        PlanResult pr = plan_cycle(drone.pose.position, cr.temp_goal, known, sampling,
                                   plan_root.split(static_cast<std::uint64_t>(cycle)));
        plan = pr.chosen;
        cr.params = pr.chosen_params;
        if (!cfg.frozen_means) sampling.mu = pr.chosen_params;
        if (cfg.keep_samples) {
          cr.samples = std::move(pr.samples);
          cr.optimal = std::move(pr.optimal);
        }
      }
    } catch (const std::domain_error&) {
      rec.cycles.push_back(std::move(cr));
      return finish(Outcome::FailurePlanner);
    }
    cr.chosen = plan;
    cr.revealed = sensor.known.size();
    rec.cycles.push_back(std::move(cr));

    // Follow the plan up to the replan waypoint.
    const int last = std::min<int>(cfg.replan_at, static_cast<int>(plan.points.size()) - 1);
    bool replan = false;
    for (int wp = 1; wp <= last && !replan; ++wp) {
      drone.waypoint_index = wp;
      const Vec2 target_wp = plan.points[static_cast<std::size_t>(wp)];
      while (distance(drone.pose.position, target_wp) > 0.0) {
        drone = step_drone(std::move(drone), target_wp, cfg.speed);
        if (detail::collides(drone.pose.position, map, r_drone)) return finish(Outcome::FailureCollision);
        if (distance(drone.pose.position, map.target) < cfg.success_radius) return finish(Outcome::Success);
        const std::vector<Obstacle> fresh = sense(map, sensor, drone.pose, cfg.sensor, &sensor_rng);
        for (std::size_t k = static_cast<std::size_t>(wp); k < plan.points.size() && !replan; ++k)
          if (min_boundary(plan.points[k], fresh, r_drone) <= 0.0) replan = true;
        if (replan) break;
      }
    }
  }
}

}  // namespace rfnav
