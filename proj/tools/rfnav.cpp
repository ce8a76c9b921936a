// rfnav command-line driver: map generation, the RF accuracy tests, single
// missions, the paired planner benchmark and plot-data export.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "rfnav/rfnav.hpp"

namespace fs = std::filesystem;
using namespace rfnav;

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "out";
  std::optional<std::string> mode;
  std::optional<int> samples;
  std::optional<double> lambda;
  bool frozen_means = false;
  bool fit_sensor = false;
  std::optional<double> noise_sigma;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--config", f.config, "Scenario JSON file")->check(CLI::ExistingFile);
  app->add_option("--out", f.out, "Output directory")->capture_default_str();
  app->add_option("--mode", f.mode, "Planner: standard|modified")->check(CLI::IsMember({"standard", "modified"}));
  app->add_option("--samples", f.samples, "Parameter samples per cycle")->check(CLI::PositiveNumber);
  app->add_option("--lambda", f.lambda, "Weight temperature")->check(CLI::PositiveNumber);
  app->add_flag("--frozen-means", f.frozen_means, "Keep the sampling means fixed");
  app->add_flag("--fit-sensor", f.fit_sensor, "Reveal obstacles through circle fits of boundary arcs");
  app->add_option("--noise-sigma", f.noise_sigma, "RF sample noise (amplitude units)")->check(CLI::NonNegativeNumber);
}

// Defaults, then the config file, then explicit flags.
ScenarioConfig resolve(const CommonFlags& f) {
  ScenarioConfig sc;
  if (!f.config.empty()) apply_config(read_json(f.config), sc);
  if (f.seed) sc.seeds = {*f.seed};
  if (f.mode) sc.mission.mode = mode_from_string(*f.mode);
  if (f.samples) sc.mission.sampling.n_samples = *f.samples;
  if (f.lambda) sc.mission.sampling.lambda = *f.lambda;
  if (f.frozen_means) sc.mission.frozen_means = true;
  if (f.fit_sensor) sc.mission.sensor.fit_circle = true;
  if (f.noise_sigma) sc.mission.rf.noise_sigma = *f.noise_sigma;
  sc.mission.sampling.validate();
  if (sc.seeds.empty()) throw std::invalid_argument("no seeds configured");
  return sc;
}

std::string map_name(int i) { return "map" + std::to_string(i); }

WorldMap preset_map(int i) {
  const std::vector<MapPreset> presets = table_presets();
  if (i < 1 || i > static_cast<int>(presets.size())) throw std::invalid_argument("preset must be 1..5");
  return build_preset(presets[static_cast<std::size_t>(i - 1)]);
}

WorldMap resolve_map(const ScenarioConfig& sc, std::uint64_t seed, int default_preset) {
  if (!sc.map.file.empty()) return load_map(sc.map.file);
  if (sc.map.targets) {
    RngStream rng(seed, 0);
    return generate_map(sc.map.targets->first, sc.map.targets->second, rng);
  }
  return preset_map(sc.map.preset ? sc.map.preset : default_preset);
}

json density_json(const WorldMap& map) {
  const DensityGrid g = obstacle_density(map);
  return {{"obstacles", map.obstacles.size()}, {"mean", g.mean}, {"variance", g.variance}};
}

// Potential toward the map target over the whole extent at 0.5 m.
PotentialGrid map_grid(const WorldMap& map, const PotentialParams& params, double r_drone) {
  const FieldContext ctx{map.target, map.obstacles, params, r_drone};
  return potential_grid(ctx, {0.0, 0.0}, map.extent.x, map.extent.y, 0.5);
}

// ---------------------------------------------------------------- verbs

int cmd_gen_map(const CommonFlags& f, std::optional<int> preset, std::optional<double> mean,
                std::optional<double> variance) {
  ScenarioConfig sc = resolve(f);
  const fs::path out = f.out;
  json summary = json::array();
  auto emit = [&](const std::string& name, const WorldMap& map, double tm, double tv) {
    map.validate();
    write_text(out / (name + ".txt"), write_map(map));
    write_text(out / (name + "_density.csv"), density_csv(obstacle_density(map)));
    json j = density_json(map);
    j["map"] = name;
    j["target_mean"] = tm;
    j["target_variance"] = tv;
    summary.push_back(std::move(j));
  };
  if (mean || variance) {
    if (!mean || !variance) throw std::invalid_argument("--mean and --variance go together");
    RngStream rng(sc.seeds.front(), 0);
    emit("custom", generate_map(*mean, *variance, rng), *mean, *variance);
  } else {
    const std::vector<MapPreset> presets = table_presets();
    for (std::size_t i = 0; i < presets.size(); ++i) {
      if (preset && *preset != static_cast<int>(i + 1)) continue;
      emit(presets[i].name, build_preset(presets[i]), presets[i].mean, presets[i].variance);
    }
    if (summary.empty()) throw std::invalid_argument("preset must be 1..5");
  }
  write_json(out / "maps.json", summary);
  for (const json& j : summary)
    std::cout << j["map"].get<std::string>() << ": mean " << fmt(j["mean"].get<double>()) << " variance "
              << fmt(j["variance"].get<double>()) << " obstacles " << j["obstacles"] << "\n";
  return 0;
}

int cmd_rf_circle(const CommonFlags& f, double radius, int positions) {
  const ScenarioConfig sc = resolve(f);
  const fs::path out = f.out;
  json runs = json::array();
  for (std::uint64_t seed : sc.seeds) {
    const CircleResult r = run_rf_circle_test(radius, positions, sc.mission.rf, RngStream(seed, 0));
    write_text(out / ("circle_seed" + std::to_string(seed) + ".csv"), circle_csv(r));
    runs.push_back({{"seed", seed}, {"max_abs_err_deg", r.max_abs_err}, {"mean_abs_err_deg", r.mean_abs_err}});
    std::cout << "seed " << seed << ": mean |err| " << fmt(r.mean_abs_err) << " deg, max " << fmt(r.max_abs_err)
              << " deg\n";
  }
  write_json(out / "circle.json", {{"radius", radius},
                                   {"positions", positions},
                                   {"noise_sigma", sc.mission.rf.noise_sigma},
                                   {"runs", runs}});
  return 0;
}

WorldMap pursuit_map() {
  WorldMap m;
  m.start = {2.0, 2.0};
  m.target = {8.0, 8.0};
  return m;
}

int cmd_rf_pursuit(const CommonFlags& f) {
  const ScenarioConfig sc = resolve(f);
  const fs::path out = f.out;
  const WorldMap map = pursuit_map();
  json runs = json::array();
  for (std::uint64_t seed : sc.seeds) {
    const PursuitResult r = run_rf_pursuit_test(map, sc.mission, RngStream(seed, 0));
    const std::string tag = "pursuit_seed" + std::to_string(seed);
    write_text(out / (tag + "_trail.csv"), trail_csv(r.record.trail));
    write_text(out / (tag + "_ticks.csv"), ticks_csv(r.record));
    runs.push_back({{"seed", seed},
                    {"outcome", to_string(r.record.outcome)},
                    {"mean_err_deg", r.mean_err_deg},
                    {"relative_length", r.record.relative_length()},
                    {"cycles", r.record.cycles.size()}});
    std::cout << "seed " << seed << ": " << to_string(r.record.outcome) << ", mean bearing error "
              << fmt(r.mean_err_deg) << " deg\n";
  }
  write_json(out / "pursuit.json", {{"config", scenario_json(sc)}, {"runs", runs}});
  return 0;
}

int cmd_mission(const CommonFlags& f, const std::string& map_file, std::optional<int> preset) {
  ScenarioConfig sc = resolve(f);
  if (!map_file.empty()) sc.map.file = map_file;
  if (preset) sc.map.preset = *preset;
  const fs::path out = f.out;
  const WorldMap map = resolve_map(sc, sc.seeds.front(), 2);
  map.validate(sc.mission.sampling.r_drone);
  write_text(out / "map.txt", write_map(map));
  write_text(out / "grid.txt", write_grid(map_grid(map, sc.mission.sampling.mu, sc.mission.sampling.r_drone)));
  json runs = json::array();
  for (std::uint64_t seed : sc.seeds) {
    const MissionRecord rec = run_mission(map, sc.mission, RngStream(seed, 0));
    const std::string tag = "mission_seed" + std::to_string(seed);
    write_json(out / (tag + ".json"), to_json(rec));
    write_text(out / (tag + "_trail.csv"), trail_csv(rec.trail));
    write_text(out / (tag + "_ticks.csv"), ticks_csv(rec));
    runs.push_back({{"seed", seed},
                    {"outcome", to_string(rec.outcome)},
                    {"relative_length", rec.relative_length()},
                    {"cycles", rec.cycles.size()}});
    std::cout << "seed " << seed << ": " << to_string(rec.mode) << " " << to_string(rec.outcome)
              << ", relative length " << fmt(rec.relative_length()) << "\n";
  }
  write_json(out / "mission.json", {{"config", scenario_json(sc)}, {"runs", runs}});
  return 0;
}

json totals_json(std::span<const MapSummary> maps) {
  int s = 0, m = 0, n = 0;
  for (const MapSummary& x : maps) {
    s += x.success_standard;
    m += x.success_modified;
    n += x.n_runs;
  }
  return {{"n_runs", n}, {"success_standard", s}, {"success_modified", m}};
}

int cmd_benchmark(const CommonFlags& f, std::optional<int> runs) {
  ScenarioConfig sc = resolve(f);
  if (runs) sc.n_runs = *runs;
  if (sc.n_runs < 1) throw std::invalid_argument("--runs must be >= 1");
  const fs::path out = f.out;
  BenchmarkConfig bc;
  bc.n_runs = sc.n_runs;
  bc.seed = sc.seeds.front();
  bc.mission = sc.mission;

  std::vector<std::pair<std::string, WorldMap>> maps;
  if (!sc.map.file.empty() || sc.map.targets || sc.map.preset) {
    maps.emplace_back("custom", resolve_map(sc, bc.seed, 2));
  } else {
    for (int i = 1; i <= 5; ++i) maps.emplace_back(map_name(i), preset_map(i));
  }

  std::vector<MapSummary> summaries;
  int tool_errors = 0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& [name, map] = maps[k];
    write_text(out / "maps" / (name + ".txt"), write_map(map));
    std::vector<RunPair> pairs;
    try {
      pairs = run_map_benchmark(map, static_cast<int>(k), bc);
    } catch (const std::exception& e) {
      std::cerr << name << ": tool error: " << e.what() << "\n";
      ++tool_errors;
      continue;
    }
    for (const RunPair& rp : pairs)
      write_json(out / "records" / (name + "_run" + std::to_string(rp.run) + ".json"), run_pair_json(rp));
    summaries.push_back(summarize(name, pairs));
    const MapSummary& s = summaries.back();
    std::cout << name << ": standard " << s.success_standard << "/" << s.n_runs << ", modified "
              << s.success_modified << "/" << s.n_runs << ", rel. length " << fmt(s.avg_relative_length_standard)
              << " vs " << fmt(s.avg_relative_length_modified) << " over " << s.n_both_succeeded << " joint runs\n";
  }
  json per_map = json::array();
  for (const MapSummary& s : summaries) per_map.push_back(to_json(s));
  write_json(out / "summary.json",
             {{"config", scenario_json(sc)}, {"maps", per_map}, {"totals", totals_json(summaries)}, {"tool_errors", tool_errors}});
  write_text(out / "success.csv", success_csv(summaries));
  write_text(out / "relative_length.csv", relative_length_csv(summaries));
  return tool_errors ? 1 : 0;
}

// Rebuilds every plot table from a benchmark directory.
int cmd_export(const CommonFlags& f, const std::string& in_dir) {
  const fs::path in = in_dir;
  const fs::path out = f.out;
  if (!fs::is_directory(in / "records")) throw std::runtime_error(in.string() + " has no records/ directory");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in / "records"))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  // Group by map name (file stem up to "_run"), keeping run order numeric.
  std::map<std::string, std::vector<std::pair<int, json>>> by_map;
  for (const fs::path& p : files) {
    const std::string stem = p.stem().string();
    const auto cut = stem.rfind("_run");
    if (cut == std::string::npos) continue;
    by_map[stem.substr(0, cut)].emplace_back(std::stoi(stem.substr(cut + 4)), read_json(p));
  }

  std::vector<MapSummary> summaries;
  const PotentialParams params = ScenarioConfig().mission.sampling.mu;
  for (auto& [name, runs] : by_map) {
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<json> docs;
    for (auto& [run, doc] : runs) {
      for (const char* mode : {"standard", "modified"}) {
        std::vector<Vec2> trail;
        for (const json& p : doc.at(mode).at("trail")) trail.push_back(vec_from_json(p));
        write_text(out / "trails" / (name + "_run" + std::to_string(run) + "_" + mode + ".csv"), trail_csv(trail));
      }
      docs.push_back(doc);
    }
    summaries.push_back(summary_from_records(name, docs));
    const fs::path map_file = in / "maps" / (name + ".txt");
    if (fs::exists(map_file))
      write_text(out / "grids" / (name + ".txt"), write_grid(map_grid(load_map(map_file), params, 0.2)));
  }
  json per_map = json::array();
  for (const MapSummary& s : summaries) per_map.push_back(to_json(s));
  write_json(out / "summary.json", {{"maps", per_map}, {"totals", totals_json(summaries)}});
  write_text(out / "success.csv", success_csv(summaries));
  write_text(out / "relative_length.csv", relative_length_csv(summaries));
  std::cout << "exported " << summaries.size() << " maps from " << files.size() << " records\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RF source seeking with a sampling-tuned potential field planner"};
  app.require_subcommand(1);

  CommonFlags f_gen, f_circle, f_pursuit, f_mission, f_bench, f_export;

  auto* gen = app.add_subcommand("gen-map", "Generate density-controlled maps (the five presets by default)");
  add_common(gen, f_gen);
  std::optional<int> gen_preset;
  std::optional<double> gen_mean, gen_var;
  gen->add_option("--preset", gen_preset, "Only this preset (1..5)");
  gen->add_option("--mean", gen_mean, "Custom target mean density");
  gen->add_option("--variance", gen_var, "Custom target density variance");

  auto* circle = app.add_subcommand("rf-circle", "Static bearing accuracy around a stationary drone");
  add_common(circle, f_circle);
  double radius = 5.0;
  int positions = 72;
  circle->add_option("--radius", radius, "Source circle radius (m)")->capture_default_str();
  circle->add_option("--positions", positions, "Equally spaced bearings")->capture_default_str();

  auto* pursuit = app.add_subcommand("rf-pursuit", "Open-field source seeking");
  add_common(pursuit, f_pursuit);

  auto* mission = app.add_subcommand("mission", "One mission on a preset or map file");
  add_common(mission, f_mission);
  std::string map_file;
  std::optional<int> mission_preset;
  mission->add_option("--map", map_file, "Map file")->check(CLI::ExistingFile);
  mission->add_option("--preset", mission_preset, "Preset map (1..5), default 2");

  auto* bench = app.add_subcommand("benchmark", "Paired standard/modified runs on the five preset maps");
  add_common(bench, f_bench);
  std::optional<int> n_runs;
  bench->add_option("--runs", n_runs, "Runs per map (default 7)");

  auto* exp = app.add_subcommand("export", "Rebuild plot tables from a benchmark output directory");
  add_common(exp, f_export);
  std::string in_dir;
  exp->add_option("--in", in_dir, "Benchmark output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_map(f_gen, gen_preset, gen_mean, gen_var);
    if (*circle) return cmd_rf_circle(f_circle, radius, positions);
    if (*pursuit) return cmd_rf_pursuit(f_pursuit);
    if (*mission) return cmd_mission(f_mission, map_file, mission_preset);
    if (*bench) return cmd_benchmark(f_bench, n_runs);
    if (*exp) return cmd_export(f_export, in_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
