/**
 * Text formats: map files, potential grids, JSON run records and the CSV
 * tables behind the plots. Every writer is deterministic: no timestamps,
 * fixed field order, shortest round-trip number formatting.
 */
#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfnav/experiments.hpp"

namespace rfnav {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- numbers

/// Shortest decimal that reads back to the same double.
inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------- map files

/*
 * rfnav-map 1
 * extent <w> <h>
 * start <x> <y>
 * target <x> <y>
 * obstacle <cx> <cy> <r>     (zero or more)
 * Blank lines and lines starting with '#' are ignored.
 */
inline std::string write_map(const WorldMap& map) {
  std::ostringstream os;
  os << "rfnav-map 1\n";
  os << "extent " << fmt(map.extent.x) << ' ' << fmt(map.extent.y) << '\n';
  os << "start " << fmt(map.start.x) << ' ' << fmt(map.start.y) << '\n';
  os << "target " << fmt(map.target.x) << ' ' << fmt(map.target.y) << '\n';
  for (const Obstacle& ob : map.obstacles)
    os << "obstacle " << fmt(ob.center.x) << ' ' << fmt(ob.center.y) << ' ' << fmt(ob.radius) << '\n';
  return os.str();
}

inline WorldMap read_map(std::istream& in) {
  WorldMap map;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto fail = [&](const std::string& why) {
      throw std::runtime_error("map line " + std::to_string(lineno) + ": " + why);
    };
    if (!header) {
      int version = 0;
      if (key != "rfnav-map" || !(ls >> version) || version != 1) fail("expected 'rfnav-map 1'");
      header = true;
      continue;
    }
    if (key == "extent") {
      if (!(ls >> map.extent.x >> map.extent.y)) fail("bad extent");
    } else if (key == "start") {
      if (!(ls >> map.start.x >> map.start.y)) fail("bad start");
    } else if (key == "target") {
      if (!(ls >> map.target.x >> map.target.y)) fail("bad target");
    } else if (key == "obstacle") {
      Obstacle ob;
      if (!(ls >> ob.center.x >> ob.center.y >> ob.radius)) fail("bad obstacle");
      ob.id = static_cast<int>(map.obstacles.size());
      map.obstacles.push_back(ob);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!header) throw std::runtime_error("map: empty input");
  return map;
}

inline WorldMap load_map(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return read_map(in);
}

// ---------------------------------------------------------------- grids

/*
 * rfnav-grid 1
 * origin <x> <y>
 * resolution <h>
 * dims <nx> <ny>
 * then ny rows of nx values, row iy holding y = origin.y + iy * h.
 */
inline std::string write_grid(const PotentialGrid& g) {
  std::ostringstream os;
  os << "rfnav-grid 1\n";
  os << "origin " << fmt(g.origin.x) << ' ' << fmt(g.origin.y) << '\n';
  os << "resolution " << fmt(g.resolution) << '\n';
  os << "dims " << g.nx << ' ' << g.ny << '\n';
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) os << (ix ? " " : "") << fmt(g.at(ix, iy));
    os << '\n';
  }
  return os.str();
}

inline PotentialGrid read_grid(std::istream& in) {
  PotentialGrid g;
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "rfnav-grid" || version != 1) throw std::runtime_error("grid: bad header");
  std::string k1, k2, k3;
  if (!(in >> k1 >> g.origin.x >> g.origin.y >> k2 >> g.resolution >> k3 >> g.nx >> g.ny) || k1 != "origin" ||
      k2 != "resolution" || k3 != "dims")
    throw std::runtime_error("grid: bad header fields");
  g.values.resize(static_cast<std::size_t>(g.nx) * g.ny);
  for (double& v : g.values)
    if (!(in >> v)) throw std::runtime_error("grid: truncated values");
  return g;
}

// ---------------------------------------------------------------- json

inline json to_json(const Vec2& v) { return json::array({v.x, v.y}); }
inline Vec2 vec_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline json to_json(const PotentialParams& p) { return {{"k_att", p.k_att}, {"k_rep", p.k_rep}, {"d0", p.d0}}; }
inline PotentialParams params_from_json(const json& j) {
  return {j.at("k_att").get<double>(), j.at("k_rep").get<double>(), j.at("d0").get<double>()};
}

inline json to_json(std::span<const Vec2> pts) {
  json a = json::array();
  for (const Vec2& p : pts) a.push_back(to_json(p));
  return a;
}

inline json to_json(const Trajectory& t) {
  return {{"points", to_json(std::span<const Vec2>(t.points))}, {"stalled", t.stalled}, {"reached", t.reached}};
}

inline Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  for (const json& p : j.at("points")) t.points.push_back(vec_from_json(p));
  t.stalled = j.at("stalled").get<bool>();
  t.reached = j.at("reached").get<bool>();
  return t;
}

inline json to_json(const CostBreakdown& c) {
  return {{"L", c.L}, {"E", c.E}, {"A", c.A}, {"P", c.P}, {"total", c.total}};
}

inline json to_json(const CycleRecord& c) {
  json j{{"index", c.index},
         {"pose", {{"x", c.pose.position.x}, {"y", c.pose.position.y}, {"heading", c.pose.heading}}},
         {"rf_valid", c.rf_valid},
         {"rf_dir", to_json(c.rf_dir)},
         {"bearing_error_deg", rad2deg(c.bearing_error)},
         {"temp_goal", to_json(c.temp_goal)},
         {"params", to_json(c.params)},
         {"revealed", c.revealed},
         {"chosen", to_json(c.chosen)}};
  if (!c.samples.empty()) {
    j["optimal"] = to_json(c.optimal);
    json s = json::array();
    for (const Sample& smp : c.samples)
      s.push_back({{"params", to_json(smp.params)},
                   {"cost", to_json(smp.cost)},
                   {"weight", smp.weight},
                   {"trajectory", to_json(smp.trajectory)}});
    j["samples"] = std::move(s);
  }
  return j;
}

inline json to_json(const MissionRecord& r) {
  json cycles = json::array();
  for (const CycleRecord& c : r.cycles) cycles.push_back(to_json(c));
  return {{"mode", to_string(r.mode)},
          {"outcome", to_string(r.outcome)},
          {"straight", r.straight},
          {"length", r.length},
          {"relative_length", r.relative_length()},
          {"mean_bearing_error_deg", rad2deg(r.mean_bearing_error())},
          {"revealed_ids", r.revealed_ids},
          {"trail", to_json(std::span<const Vec2>(r.trail))},
          {"cycles", std::move(cycles)}};
}

inline json to_json(const MapSummary& s) {
  return {{"map", s.name},
          {"n_runs", s.n_runs},
          {"success_standard", s.success_standard},
          {"success_modified", s.success_modified},
          {"success_rate_standard", s.success_rate_standard()},
          {"success_rate_modified", s.success_rate_modified()},
          {"n_both_succeeded", s.n_both_succeeded},
          {"avg_relative_length_standard", s.avg_relative_length_standard},
          {"avg_relative_length_modified", s.avg_relative_length_modified}};
}

/// Minimal view of a run pair sufficient to recompute a MapSummary.
inline json run_pair_json(const RunPair& rp) {
  return {{"map_index", rp.map_index},
          {"run", rp.run},
          {"start", to_json(rp.start)},
          {"target", to_json(rp.target)},
          {"standard", to_json(rp.standard)},
          {"modified", to_json(rp.modified)}};
}

/// Rebuilds a MapSummary from exported run-pair documents alone.
inline MapSummary summary_from_records(const std::string& name, std::span<const json> pairs) {
  MapSummary s;
  s.name = name;
  for (const json& p : pairs) {
    ++s.n_runs;
    const bool ok_s = p.at("standard").at("outcome") == "success";
    const bool ok_m = p.at("modified").at("outcome") == "success";
    s.success_standard += ok_s;
    s.success_modified += ok_m;
    if (ok_s && ok_m) {
      ++s.n_both_succeeded;
      s.avg_relative_length_standard += p.at("standard").at("relative_length").get<double>();
      s.avg_relative_length_modified += p.at("modified").at("relative_length").get<double>();
    }
  }
  if (s.n_both_succeeded) {
    s.avg_relative_length_standard /= s.n_both_succeeded;
    s.avg_relative_length_modified /= s.n_both_succeeded;
  }
  return s;
}

// ---------------------------------------------------------------- scenario

/*
 * Scenario file (JSON). Every key is optional; unknown keys are rejected so
 * a typo cannot silently fall back to a default.
 *
 * {
 *   "mode": "standard" | "modified",
 *   "frozen_means": bool,
 *   "seeds": [uint, ...],
 *   "n_runs": int,
 *   "map": {"preset": 1..5} | {"file": "path"} | {"mean": m, "variance": v},
 *   "sampling": {"k_att", "k_rep", "d0", "n_samples", "lambda", "step", "max_steps", "r_drone"},
 *   "rf": {"frequency", "half_side", "periods", "oversample", "noise_sigma"},
 *   "sensor": {"half_angle_deg", "range", "fit_circle", "fit_noise"},
 *   "mission": {"horizon", "speed", "success_radius", "replan_at", "budget"}
 * }
 */
struct MapSpec {
  int preset = 0;  // 1..5, 0 = none
  std::string file;
  std::optional<std::pair<double, double>> targets;  // (mean, variance)
};

struct ScenarioConfig {
  MissionConfig mission;
  std::vector<std::uint64_t> seeds{kBenchmarkSeed};
  int n_runs = 7;
  MapSpec map;

  ScenarioConfig() { mission = default_benchmark_config().mission; }
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::runtime_error("config: '" + where + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw std::runtime_error("config: unknown key '" + where + "." + k + "'");
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline PlannerMode mode_from_string(const std::string& s) {
  if (s == "standard") return PlannerMode::Standard;
  if (s == "modified") return PlannerMode::Modified;
  throw std::invalid_argument("unknown mode '" + s + "' (expected standard|modified)");
}

inline void apply_config(const json& j, ScenarioConfig& sc) {
  detail::check_keys(j, {"mode", "frozen_means", "seeds", "n_runs", "map", "sampling", "rf", "sensor", "mission"}, "");
  MissionConfig& m = sc.mission;
  if (j.contains("mode")) m.mode = mode_from_string(j.at("mode").get<std::string>());
  detail::read_opt(j, "frozen_means", m.frozen_means);
  detail::read_opt(j, "seeds", sc.seeds);
  detail::read_opt(j, "n_runs", sc.n_runs);
  if (j.contains("map")) {
    const json& mj = j.at("map");
    detail::check_keys(mj, {"preset", "file", "mean", "variance"}, "map");
    detail::read_opt(mj, "preset", sc.map.preset);
    detail::read_opt(mj, "file", sc.map.file);
    if (mj.contains("mean") != mj.contains("variance")) throw std::runtime_error("config: map needs both mean and variance");
    if (mj.contains("mean")) sc.map.targets = std::pair{mj.at("mean").get<double>(), mj.at("variance").get<double>()};
  }
  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    detail::check_keys(s, {"k_att", "k_rep", "d0", "n_samples", "lambda", "step", "max_steps", "r_drone"}, "sampling");
    PotentialParams mu = m.sampling.mu;
    detail::read_opt(s, "k_att", mu.k_att);
    detail::read_opt(s, "k_rep", mu.k_rep);
    detail::read_opt(s, "d0", mu.d0);
    double r_drone = m.sampling.r_drone;
    detail::read_opt(s, "r_drone", r_drone);
    SamplingConfig fresh = SamplingConfig::around(mu, r_drone);
    fresh.n_samples = m.sampling.n_samples;
    fresh.lambda = m.sampling.lambda;
    fresh.step = m.sampling.step;
    fresh.max_steps = m.sampling.max_steps;
    detail::read_opt(s, "n_samples", fresh.n_samples);
    detail::read_opt(s, "lambda", fresh.lambda);
    detail::read_opt(s, "step", fresh.step);
    detail::read_opt(s, "max_steps", fresh.max_steps);
    fresh.validate();
    m.sampling = fresh;
  }
  if (j.contains("rf")) {
    const json& r = j.at("rf");
    detail::check_keys(r, {"frequency", "half_side", "periods", "oversample", "noise_sigma"}, "rf");
    detail::read_opt(r, "frequency", m.rf.frequency);
    detail::read_opt(r, "half_side", m.rf.half_side);
    detail::read_opt(r, "periods", m.rf.periods);
    detail::read_opt(r, "oversample", m.rf.oversample);
    detail::read_opt(r, "noise_sigma", m.rf.noise_sigma);
  }
  if (j.contains("sensor")) {
    const json& s = j.at("sensor");
    detail::check_keys(s, {"half_angle_deg", "range", "fit_circle", "fit_noise"}, "sensor");
    if (s.contains("half_angle_deg")) m.sensor.half_angle = deg2rad(s.at("half_angle_deg").get<double>());
    detail::read_opt(s, "range", m.sensor.range);
    detail::read_opt(s, "fit_circle", m.sensor.fit_circle);
    detail::read_opt(s, "fit_noise", m.sensor.fit_noise);
  }
  if (j.contains("mission")) {
    const json& s = j.at("mission");
    detail::check_keys(s, {"horizon", "speed", "success_radius", "replan_at", "budget"}, "mission");
    detail::read_opt(s, "horizon", m.horizon);
    detail::read_opt(s, "speed", m.speed);
    detail::read_opt(s, "success_radius", m.success_radius);
    detail::read_opt(s, "replan_at", m.replan_at);
    detail::read_opt(s, "budget", m.budget);
  }
}

/// Effective configuration, echoed next to every output so runs are self-describing.
inline json scenario_json(const ScenarioConfig& sc) {
  const MissionConfig& m = sc.mission;
  json map = json::object();
  if (sc.map.preset) map["preset"] = sc.map.preset;
  if (!sc.map.file.empty()) map["file"] = sc.map.file;
  if (sc.map.targets) {
    map["mean"] = sc.map.targets->first;
    map["variance"] = sc.map.targets->second;
  }
  return {{"mode", to_string(m.mode)},
          {"frozen_means", m.frozen_means},
          {"seeds", sc.seeds},
          {"n_runs", sc.n_runs},
          {"map", map},
          {"sampling",
           {{"k_att", m.sampling.mu.k_att},
            {"k_rep", m.sampling.mu.k_rep},
            {"d0", m.sampling.mu.d0},
            {"n_samples", m.sampling.n_samples},
            {"lambda", m.sampling.lambda},
            {"step", m.sampling.step},
            {"max_steps", m.sampling.max_steps},
            {"r_drone", m.sampling.r_drone}}},
          {"rf",
           {{"frequency", m.rf.frequency},
            {"half_side", m.rf.half_side},
            {"periods", m.rf.periods},
            {"oversample", m.rf.oversample},
            {"noise_sigma", m.rf.noise_sigma}}},
          {"sensor",
           {{"half_angle_deg", rad2deg(m.sensor.half_angle)},
            {"range", m.sensor.range},
            {"fit_circle", m.sensor.fit_circle},
            {"fit_noise", m.sensor.fit_noise}}},
          {"mission",
           {{"horizon", m.horizon},
            {"speed", m.speed},
            {"success_radius", m.success_radius},
            {"replan_at", m.replan_at},
            {"budget", m.budget}}}};
}

// ---------------------------------------------------------------- files

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + p.string());
}

inline void write_json(const std::filesystem::path& p, const json& j) { write_text(p, j.dump(1) + "\n"); }

inline json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return json::parse(in);
}

/// CSV with a header row; cells are written verbatim.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row(header); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) throw std::invalid_argument("csv: column count mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
    return *this;
  }

  std::string str() const { return os_.str(); }

 private:
  std::size_t cols_;
  std::ostringstream os_;
};

inline std::string trail_csv(std::span<const Vec2> trail) {
  CsvWriter w({"step", "x", "y"});
  for (std::size_t i = 0; i < trail.size(); ++i) w.row({std::to_string(i), fmt(trail[i].x), fmt(trail[i].y)});
  return w.str();
}

inline std::string density_csv(const DensityGrid& g) {
  CsvWriter w({"ix", "iy", "density"});
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) w.row({std::to_string(ix), std::to_string(iy), fmt(g.at(ix, iy))});
  return w.str();
}

inline std::string circle_csv(const CircleResult& r) {
  CsvWriter w({"true_deg", "est_deg", "err_deg", "valid"});
  for (const CircleRow& row : r.rows) w.row({fmt(row.true_deg), fmt(row.est_deg), fmt(row.err_deg), row.valid ? "1" : "0"});
  return w.str();
}

inline std::string ticks_csv(const MissionRecord& r) {
  CsvWriter w({"tick", "x", "y", "heading_deg", "rf_valid", "bearing_error_deg"});
  for (const CycleRecord& c : r.cycles)
    w.row({std::to_string(c.index), fmt(c.pose.position.x), fmt(c.pose.position.y), fmt(rad2deg(c.pose.heading)),
           c.rf_valid ? "1" : "0", fmt(rad2deg(c.bearing_error))});
  return w.str();
}

inline std::string success_csv(std::span<const MapSummary> maps) {
  CsvWriter w({"map", "mode", "successes", "n_runs", "success_rate"});
  for (const MapSummary& s : maps) {
    w.row({s.name, "standard", std::to_string(s.success_standard), std::to_string(s.n_runs), fmt(s.success_rate_standard())});
    w.row({s.name, "modified", std::to_string(s.success_modified), std::to_string(s.n_runs), fmt(s.success_rate_modified())});
  }
  return w.str();
}

inline std::string relative_length_csv(std::span<const MapSummary> maps) {
  CsvWriter w({"map", "mode", "n_both_succeeded", "avg_relative_length"});
  for (const MapSummary& s : maps) {
    w.row({s.name, "standard", std::to_string(s.n_both_succeeded), fmt(s.avg_relative_length_standard)});
    w.row({s.name, "modified", std::to_string(s.n_both_succeeded), fmt(s.avg_relative_length_modified)});
  }
  return w.str();
}

}  // namespace rfnav
