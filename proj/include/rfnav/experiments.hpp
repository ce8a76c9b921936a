/**
 * The two evaluation experiments: RF bearing accuracy (static circle and
 * open-field pursuit) and the paired standard-vs-modified planner benchmark
 * over density-controlled maps.
 */
#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "rfnav/world.hpp"

namespace rfnav {

/// Sample noise (units of amplitude) whose circle-test mean error, averaged
/// over seeds 1-10, is closest to 1.5 deg on the grid 0.05, 0.10, ..., 0.30.
inline constexpr double kCalibratedNoise = 0.2;

// ---------------------------------------------------------------- RF tests

struct CircleRow {
  double true_deg = 0.0;
  double est_deg = 0.0;
  double err_deg = 0.0;
  bool valid = false;
};

struct CircleResult {
  std::vector<CircleRow> rows;
  double max_abs_err = 0.0;
  double mean_abs_err = 0.0;
};

/**
 * Stationary drone at the origin with heading 0; the source visits
 * `n_positions` equally spaced bearings at `radius`. Each position takes up
 * to `retries` measurement windows until the estimate is usable, and the
 * previous estimate serves as the tracking prior. The sweep starts at the
 * first bearing >= 90 deg, where the left/right test is best conditioned
 * (on the x axis it is a coin flip and a wrong first lock would persist),
 * and wraps around; rows are still reported in bearing order. Positions
 * that never yield a usable estimate count as a 180 deg error.
 */
inline CircleResult run_rf_circle_test(double radius, int n_positions, const RfConfig& rf, const RngStream& rng,
                                       int retries = 5) {
  const AntennaArray array = AntennaArray::square(rf.half_side, rf.wavelength());
  if (!(radius > 2.0 * rf.half_side)) throw std::invalid_argument("rf-circle: radius inside the aperture");
  if (n_positions < 1) throw std::invalid_argument("rf-circle: need at least one position");
  const Pose pose({0.0, 0.0}, 0.0);
  RfSource src;
  src.frequency = rf.frequency;
  src.amplitude = rf.amplitude;
  src.initial_phase = rf.initial_phase;

  CircleResult out;
  out.rows.resize(static_cast<std::size_t>(n_positions));
  std::optional<Vec2> prior;
  const int first = (n_positions + 3) / 4;
  for (int step = 0; step < n_positions; ++step) {
    const int i = (first + step) % n_positions;
    const double bearing = kTwoPi * i / n_positions;
    src.position = unit_from_angle(bearing) * radius;
    RngStream noise = rng.split(static_cast<std::uint64_t>(i));
    CircleRow row;
    row.true_deg = rad2deg(wrap_angle(bearing));
    for (int k = 0; k < retries && !row.valid; ++k) {
      const DirectionEstimate est = estimate_direction(array, measure_phases(array, pose, src, rf, &noise), pose, prior);
      if (!est.valid) continue;
      row.valid = true;
      prior = est.world_dir;
      const double a = std::atan2(est.world_dir.y, est.world_dir.x);
      row.est_deg = rad2deg(a);
      row.err_deg = rad2deg(wrap_angle(a - bearing));
    }
    if (!row.valid) row.err_deg = 180.0;
    out.max_abs_err = std::max(out.max_abs_err, std::abs(row.err_deg));
    out.mean_abs_err += std::abs(row.err_deg);
    out.rows[static_cast<std::size_t>(i)] = row;
  }
  out.mean_abs_err /= n_positions;
  return out;
}

struct PursuitResult {
  MissionRecord record;
  double mean_err_deg = 0.0;
};

/// Open-field mission; the error is averaged over every replanning tick.
inline PursuitResult run_rf_pursuit_test(const WorldMap& map, const MissionConfig& cfg, const RngStream& rng) {
  if (!map.obstacles.empty()) throw std::invalid_argument("rf-pursuit: map must be obstacle-free");
  PursuitResult r;
  r.record = run_mission(map, cfg, rng);
  r.mean_err_deg = rad2deg(r.record.mean_bearing_error());
  return r;
}

// ---------------------------------------------------------------- maps

struct MapPreset {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;
  GeneratorOptions gen;
  std::uint64_t seed = 0;
};

/**
 * The five density targets. Maps 1-4 jitter a 2 m lattice of disks centred
 * on odd grid corners (each 1 m cell touches exactly one site, so the
 * unjittered lattice has zero variance); Map 5 scatters disks with 90 % of
 * candidates in the western half.
 */
inline std::vector<MapPreset> table_presets() {
  const double means[5] = {0.0702, 0.1102, 0.1267, 0.1520, 0.1552};
  const double vars[5] = {0.0020, 0.0023, 0.0021, 0.0011, 0.0152};
  std::vector<MapPreset> out;
  for (int i = 0; i < 5; ++i) {
    MapPreset p;
    p.name = "map" + std::to_string(i + 1);
    p.mean = means[i];
    p.variance = vars[i];
    p.seed = 100 + static_cast<std::uint64_t>(i);
    p.gen.aim = 0.05;
    if (i < 4) {
      p.gen.layout = Layout::Lattice;
      p.gen.jitter = 0.3;
    } else {
      p.gen.layout = Layout::Random;
      p.gen.dense_half_prob = 0.9;
      p.gen.r_min = 0.25;
      p.gen.r_max = 0.45;
    }
    out.push_back(p);
  }
  return out;
}

inline WorldMap build_preset(const MapPreset& p) {
  RngStream rng(p.seed, 0);
  return generate_map(p.mean, p.variance, rng, p.gen);
}

// ---------------------------------------------------------------- benchmark

struct RunPair {
  int map_index = 0;
  int run = 0;
  Vec2 start;
  Vec2 target;
  MissionRecord standard;
  MissionRecord modified;
};

struct MapSummary {
  std::string name;
  int n_runs = 0;
  int success_standard = 0;
  int success_modified = 0;
  int n_both_succeeded = 0;
  double avg_relative_length_standard = 0.0;
  double avg_relative_length_modified = 0.0;

  double success_rate_standard() const { return n_runs ? static_cast<double>(success_standard) / n_runs : 0.0; }
  double success_rate_modified() const { return n_runs ? static_cast<double>(success_modified) / n_runs : 0.0; }
};

struct BenchmarkConfig {
  int n_runs = 7;
  std::uint64_t seed = 7;
  double min_separation = 6.0;
  MissionConfig mission;
};

/// Draws a start/target pair inside [0.5, extent - 0.5] with clearance and separation.
inline std::pair<Vec2, Vec2> draw_endpoints(const WorldMap& map, RngStream& rng, double r_drone, double clearance,
                                            double min_separation) {
  auto free_point = [&] {
    for (int k = 0; k < 10000; ++k) {
      const Vec2 p{rng.uniform(0.5, map.extent.x - 0.5), rng.uniform(0.5, map.extent.y - 0.5)};
      if (min_boundary(p, map.obstacles, r_drone) >= clearance) return p;
    }
    throw std::runtime_error("draw_endpoints: no free point");
  };
  for (int k = 0; k < 10000; ++k) {
    const Vec2 a = free_point();
    const Vec2 b = free_point();
    if (distance(a, b) >= min_separation) return {a, b};
  }
  throw std::runtime_error("draw_endpoints: separation not achievable");
}

inline MapSummary summarize(const std::string& name, std::span<const RunPair> runs) {
  MapSummary s;
  s.name = name;
  for (const RunPair& r : runs) {
    ++s.n_runs;
    s.success_standard += r.standard.success();
    s.success_modified += r.modified.success();
    if (r.standard.success() && r.modified.success()) {
      ++s.n_both_succeeded;
      s.avg_relative_length_standard += r.standard.relative_length();
      s.avg_relative_length_modified += r.modified.relative_length();
    }
  }
  if (s.n_both_succeeded) {
    s.avg_relative_length_standard /= s.n_both_succeeded;
    s.avg_relative_length_modified /= s.n_both_succeeded;
  }
  return s;
}

/**
 * Runs both planners on every (map, run) with the same endpoints and the
 * same mission stream. `map_index` is 0-based. Endpoints come from stream
 * (seed, map_index) split by run; missions from (seed, 1000 + map_index).
 */
inline std::vector<RunPair> run_map_benchmark(const WorldMap& map, int map_index, const BenchmarkConfig& cfg) {
  std::vector<RunPair> out;
  const RngStream endpoints(cfg.seed, static_cast<std::uint64_t>(map_index));
  const RngStream missions(cfg.seed, 1000 + static_cast<std::uint64_t>(map_index));
  for (int run = 0; run < cfg.n_runs; ++run) {
    RngStream ep = endpoints.split(static_cast<std::uint64_t>(run));
    RunPair rp;
    rp.map_index = map_index;
    rp.run = run;
    std::tie(rp.start, rp.target) =
        draw_endpoints(map, ep, cfg.mission.sampling.r_drone, 0.5, cfg.min_separation);
    WorldMap m = map;
    m.start = rp.start;
    m.target = rp.target;
    const RngStream ms = missions.split(static_cast<std::uint64_t>(run));
    MissionConfig mc = cfg.mission;
    mc.mode = PlannerMode::Standard;
    rp.standard = run_mission(m, mc, ms);
    mc.mode = PlannerMode::Modified;
    rp.modified = run_mission(m, mc, ms);
    out.push_back(std::move(rp));
  }
  return out;
}

/**
 * Standard-planner parameters tuned on the Map 2 analogue: best success over
 * 14 runs of tuning seed 99 on the grid k_att in {0.5, 1, 2, 4},
 * k_rep in {0.05, 0.1, 0.2, 0.5, 1}, d0 in {0.3, 0.5, 0.75, 1, 1.5}; ties
 * go to the largest d0, then the largest k_rep / k_att.
 */
inline PotentialParams tuned_params() { return {0.5, 0.2, 1.5}; }

/// Weight temperature for the benchmark, chosen on tuning seed 99 from {1, 3, 10, 30, 100}.
inline constexpr double kBenchmarkLambda = 100.0;
inline constexpr std::uint64_t kBenchmarkSeed = 7;
inline constexpr std::uint64_t kTuningSeed = 99;

inline BenchmarkConfig default_benchmark_config() {
  BenchmarkConfig cfg;
  cfg.seed = kBenchmarkSeed;
  cfg.mission.sampling = SamplingConfig::around(tuned_params());
  cfg.mission.sampling.lambda = kBenchmarkLambda;
  cfg.mission.rf.noise_sigma = kCalibratedNoise;
  return cfg;
}

}  // namespace rfnav
